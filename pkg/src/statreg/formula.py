"""A deliberately tiny model-formula language and CSV design builder.

    resp ~ term (+ term)*        term := col | I(col^k) | sin(c*pi*col) | cos(c*pi*col)

``k`` is 2, 3 or 4; ``- 1`` anywhere after ``~`` drops the intercept. Errors
report the byte offset of the offending token.
"""

from __future__ import annotations

import csv
import logging
import math
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import EmptyAfterFiltering, FileNotFound, ParseError, UnknownColumn
from .ols_core import RegressionData

log = logging.getLogger(__name__)

POWERS = (2, 3, 4)
_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_.]*)|(?P<op>[~+\-()^*]))"
)


@dataclass(frozen=True)
class Term:
    kind: str  # "col", "pow", "sin", "cos"
    column: str
    power: int = 1
    freq: float = 1.0

    @property
    def label(self) -> str:
        if self.kind == "col":
            return self.column
        if self.kind == "pow":
            return f"I({self.column}^{self.power})"
        return f"{self.kind}({_num(self.freq)}*pi*{self.column})"

    def evaluate(self, col: np.ndarray) -> np.ndarray:
        if self.kind == "col":
            return col
        if self.kind == "pow":
            return col**self.power
        f = np.sin if self.kind == "sin" else np.cos
        return f(self.freq * math.pi * col)


def _num(v: float) -> str:
    s = repr(float(v))
    return s[:-2] if s.endswith(".0") else s


@dataclass(frozen=True)
class Formula:
    response: str
    terms: tuple[Term, ...]
    intercept: bool = True

    def __str__(self) -> str:
        rhs = " + ".join(t.label for t in self.terms)
        if not self.intercept:
            rhs = f"{rhs} - 1" if rhs else "-1"
        return f"{self.response} ~ {rhs}"

    @property
    def columns(self) -> list[str]:
        seen = [self.response]
        for t in self.terms:
            if t.column not in seen:
                seen.append(t.column)
        return seen

    @property
    def labels(self) -> tuple[str, ...]:
        head = ("(Intercept)",) if self.intercept else ()
        return head + tuple(t.label for t in self.terms)


class _Tokens:
    def __init__(self, text: str):
        self.text = text
        self.items = []  # (kind, value, char_pos)
        pos = 0
        while pos < len(text):
            if text[pos:].strip() == "":
                break
            m = _TOKEN.match(text, pos)
            if not m:
                start = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
                raise ParseError(f"unexpected character {text[start]!r}", self.offset(start))
            kind = m.lastgroup
            self.items.append((kind, m.group(kind), m.start(kind)))
            pos = m.end()
        self.i = 0

    def offset(self, char_pos: int) -> int:
        return len(self.text[:char_pos].encode("utf-8"))

    def peek(self, k: int = 0):
        j = self.i + k
        return self.items[j] if j < len(self.items) else ("end", "", len(self.text))

    def next(self):
        tok = self.peek()
        self.i += 1
        return tok

    def fail(self, message: str, tok=None):
        tok = tok or self.peek()
        what = "end of input" if tok[0] == "end" else repr(tok[1])
        raise ParseError(f"{message}, found {what}", self.offset(tok[2]))

    def expect(self, kind: str, value: str | None = None):
        tok = self.peek()
        if tok[0] != kind or (value is not None and tok[1] != value):
            self.fail(f"expected {value or kind!r}")
        return self.next()


def _parse_term(tk: _Tokens) -> Term:
    kind, value, _ = tk.peek()
    if kind != "ident":
        tk.fail("expected a term")
    if tk.peek(1)[:2] != ("op", "("):
        tk.next()
        return Term("col", value)
    tk.next()
    tk.next()
    if value == "I":
        col = tk.expect("ident")[1]
        tk.expect("op", "^")
        ptok = tk.peek()
        if ptok[0] != "num" or not ptok[1].isdigit() or int(ptok[1]) not in POWERS:
            tk.fail(f"power must be one of {POWERS}", ptok)
        tk.next()
        tk.expect("op", ")")
        return Term("pow", col, power=int(ptok[1]))
    if value in ("sin", "cos"):
        freq = float(tk.expect("num")[1])
        tk.expect("op", "*")
        tk.expect("ident", "pi")
        tk.expect("op", "*")
        col = tk.expect("ident")[1]
        tk.expect("op", ")")
        return Term(value, col, freq=freq)
    raise ParseError(f"unknown function {value!r}", tk.offset(tk.items[tk.i - 2][2]))


def parse_formula(text: str) -> Formula:
    tk = _Tokens(text)
    response = tk.expect("ident")[1]
    tk.expect("op", "~")
    terms: list[Term] = []
    intercept = True
    sign = "+"
    if tk.peek()[:2] == ("op", "-"):
        sign = tk.next()[1]
    while True:
        if sign == "-":
            tok = tk.peek()
            if tok[:2] != ("num", "1"):
                tk.fail("only '- 1' may follow a minus sign")
            tk.next()
            intercept = False
        else:
            start = tk.peek()
            term = _parse_term(tk)
            if term.column == response:
                raise ParseError("response used as a regressor", tk.offset(start[2]))
            terms.append(term)
        tok = tk.peek()
        if tok[0] == "end":
            break
        if tok[:2] in (("op", "+"), ("op", "-")):
            sign = tk.next()[1]
            continue
        tk.fail("expected '+', '-' or end of formula")
    if len(set(t.label for t in terms)) != len(terms):
        raise ParseError("duplicate term", 0)
    return Formula(response, tuple(terms), intercept)


def _as_float(cell: str) -> float | None:
    try:
        v = float(cell)
    except (TypeError, ValueError):
        return None
    return v if math.isfinite(v) else None


def build_design(formula: Formula, table: dict[str, np.ndarray]) -> RegressionData:
    for name in formula.columns:
        if name not in table:
            raise UnknownColumn(f"column {name!r} not found")
    y = table[formula.response]
    cols = [np.ones(y.size)] if formula.intercept else []
    cols += [t.evaluate(table[t.column]) for t in formula.terms]
    if not cols:
        raise UnknownColumn("formula has no regressors")
    return RegressionData(y, np.column_stack(cols), formula.labels)


def load_csv(path, formula: Formula | str) -> RegressionData:
    """Read a comma-separated file with a header and build the design.

    Rows with a missing or non-numeric value in any referenced column are
    dropped and the count is logged.
    """
    if isinstance(formula, str):
        formula = parse_formula(formula)
    path = Path(path)
    if not path.is_file():
        raise FileNotFound(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise EmptyAfterFiltering(f"{path} is empty")
        header = [h.strip() for h in header]
        missing = [c for c in formula.columns if c not in header]
        if missing:
            raise UnknownColumn(f"column {missing[0]!r} not found in {path}")
        idx = [header.index(c) for c in formula.columns]
        rows, dropped = [], 0
        for line in reader:
            if not line or all(not c.strip() for c in line):
                continue
            vals = [_as_float(line[i]) if i < len(line) else None for i in idx]
            if any(v is None for v in vals):
                dropped += 1
                continue
            rows.append(vals)
    if dropped:
        log.warning("dropped %d row(s) with missing or non-numeric values", dropped)
    if not rows:
        raise EmptyAfterFiltering(f"no complete rows left in {path}")
    arr = np.array(rows, dtype=float)
    table = {c: arr[:, j] for j, c in enumerate(formula.columns)}
    return build_design(formula, table)
