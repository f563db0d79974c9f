"""Monte Carlo estimates of the level of the overall significance test.

Replicate ``r`` draws its design and errors from streams derived from
``(base_seed, r)``, so every method in a run sees the same data and the
result does not depend on the number of workers.
"""

from __future__ import annotations

import csv
import io
import json
import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .autocov import empirical_autocov, pd_projection
from .cov_methods import (
    MethodConfig,
    aic_curve,
    ar_theoretical_autocov,
    default_ar_max_order,
    estimate_covariance,
    fit_ar_from_autocov,
)
from .errors import NumericalError, StatRegError, UsageError
from .inference import f_sf, overall_significance
from .ols_core import OlsFit, RegressionData, fit_ols, plugin_covariance
from .processes import (
    DesignSpec,
    canonical_kind,
    derive_rng,
    gen_design_mod2,
    generate_process,
)

INTERCEPT = 3.0
FAILURE_ABORT_FRACTION = 0.01
TABLE_COLUMNS = ("Fisher", "fitAR", "spectralproj", "efromovich", "kernel", "hac")

_STREAM_DESIGN, _STREAM_ERRORS, _STREAM_METHOD = 0, 1, 2


@dataclass(frozen=True)
class FTestResult:
    statistic: float
    df1: int
    df2: int
    p_value: float


def classical_f_test(fit: OlsFit) -> FTestResult:
    """Overall F test assuming i.i.d. errors, (p - 1, n - p) degrees of freedom."""
    n, p = fit.n, fit.p
    if not fit.data.has_intercept or p < 2:
        raise UsageError("the overall F test needs an intercept and a regressor")
    y = fit.data.y
    tss = float(np.sum((y - y.mean()) ** 2))
    df1, df2 = p - 1, n - p
    ess = max(tss - fit.rss, 0.0)
    if fit.rss == 0.0:
        f = math.inf if ess > 0 else 0.0
    else:
        f = (ess / df1) / (fit.rss / df2)
    return FTestResult(f, df1, df2, 0.0 if math.isinf(f) else f_sf(f, df1, df2))


@dataclass(frozen=True)
class ExperimentConfig:
    process: str = "AR1"
    n: int = 1000
    replicates: int = 500
    methods: tuple[MethodConfig, ...] = (MethodConfig("fitAR"),)
    alpha: float = 0.05
    base_seed: int = 20240101
    design: DesignSpec = DesignSpec()
    process_params: dict = field(default_factory=dict)
    include_fisher: bool = True
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "process", canonical_kind(self.process))
        object.__setattr__(self, "methods", tuple(self.methods))
        if self.replicates < 1:
            raise UsageError("replicates must be >= 1")
        if not 0.0 < self.alpha < 1.0:
            raise UsageError("alpha must lie in (0, 1)")
        if self.n < 4:
            raise UsageError("n must be >= 4")


def simulate_null_data(config: ExperimentConfig, replicate: int) -> RegressionData:
    """Y = 3 + 0 X1 + 0 X2 + e for replicate ``replicate``."""
    n = config.n
    x = gen_design_mod2(
        n, derive_rng(config.base_seed, replicate, _STREAM_DESIGN), config.design.ar_coeff
    )
    e = generate_process(
        config.process,
        n,
        derive_rng(config.base_seed, replicate, _STREAM_ERRORS),
        **config.process_params,
    )
    return RegressionData.with_intercept(INTERCEPT + e, x, ("X1", "X2"))


def _replicate(config: ExperimentConfig, r: int) -> dict:
    fit = fit_ols(simulate_null_data(config, r))
    out = {}
    if config.include_fisher:
        out["Fisher"] = (classical_f_test(fit).p_value < config.alpha, None)
    for idx, method in enumerate(config.methods):
        rng = derive_rng(config.base_seed, r, _STREAM_METHOD, idx)
        try:
            cov = estimate_covariance(fit, method, rng)
            chi = overall_significance(fit, cov)
        except StatRegError as exc:
            out[_label(config, idx)] = (None, type(exc).__name__)
            continue
        out[_label(config, idx)] = (chi.p_value < config.alpha, cov.selected_param)
    return out


def _label(config: ExperimentConfig, idx: int) -> str:
    labels = [m.label for m in config.methods]
    name = labels[idx]
    return name if labels.count(name) == 1 else f"{name}#{idx}"


@dataclass(frozen=True)
class LevelCell:
    process: str
    n: int
    method: str
    rejections: int
    valid: int
    failures: int
    frequency: float
    mc_se: float
    selected: dict

    def band(self, width: float = 3.0) -> tuple[float, float]:
        return self.frequency - width * self.mc_se, self.frequency + width * self.mc_se


@dataclass(frozen=True)
class LevelReport:
    cells: tuple[LevelCell, ...]
    replicates: int
    alpha: float
    base_seed: int

    def cell(self, method: str, process: str | None = None, n: int | None = None) -> LevelCell:
        for c in self.cells:
            if c.method == method and process in (None, c.process) and n in (None, c.n):
                return c
        raise KeyError(method)

    def merged(self, other: "LevelReport") -> "LevelReport":
        return LevelReport(self.cells + other.cells, self.replicates, self.alpha, self.base_seed)

    def to_json(self) -> str:
        payload = {
            "replicates": self.replicates,
            "alpha": self.alpha,
            "base_seed": self.base_seed,
            "cells": [asdict(c) for c in self.cells],
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        """Rows process x n, one frequency and one SE column per method."""
        methods = []
        for c in self.cells:
            if c.method not in methods:
                methods.append(c.method)
        order = {m: i for i, m in enumerate(TABLE_COLUMNS)}
        methods.sort(key=lambda m: order.get(m, len(order)))
        rows = {}
        for c in self.cells:
            rows.setdefault((c.n, c.process), {})[c.method] = c
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["n", "process"] + [h for m in methods for h in (m, f"{m}_se")])
        for (n, process), byname in sorted(rows.items()):
            line = [n, process]
            for m in methods:
                c = byname.get(m)
                line += [f"{c.frequency:.4f}", f"{c.mc_se:.4f}"] if c else ["", ""]
            writer.writerow(line)
        return buf.getvalue()


def _summarize_selected(values: list) -> dict:
    vals = [v for v in values if v is not None]
    if not vals:
        return {}
    if isinstance(vals[0], (list, tuple)):
        return {"distinct": len({tuple(v) for v in vals})}
    arr = np.asarray(vals, dtype=float)
    summary = {
        "mean": float(arr.mean()),
        "median": float(np.median(arr)),
        "q25": float(np.quantile(arr, 0.25)),
        "q75": float(np.quantile(arr, 0.75)),
    }
    if all(float(v).is_integer() for v in vals):
        counts = Counter(int(v) for v in vals)
        summary["mode"] = min(counts, key=lambda k: (-counts[k], k))
        summary["counts"] = {str(k): counts[k] for k in sorted(counts)}
    return summary


def _map_replicates(fn, count: int, workers: int) -> list:
    if workers <= 1:
        return [fn(r) for r in range(count)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(count)))


def run_level_experiment(config: ExperimentConfig) -> LevelReport:
    """Rejection frequency of the overall test under H0: beta2 = beta3 = 0."""
    results = _map_replicates(lambda r: _replicate(config, r), config.replicates, config.workers)
    labels = (["Fisher"] if config.include_fisher else []) + [
        _label(config, i) for i in range(len(config.methods))
    ]
    cells = []
    for label in labels:
        outcomes = [res[label] for res in results]
        decisions = [rej for rej, _ in outcomes if rej is not None]
        failures = len(outcomes) - len(decisions)
        if failures > FAILURE_ABORT_FRACTION * config.replicates:
            kinds = Counter(info for rej, info in outcomes if rej is None)
            raise NumericalError(
                f"{label}: {failures} of {config.replicates} replicates failed ({dict(kinds)})"
            )
        valid = len(decisions)
        rej = int(sum(decisions))
        freq = rej / valid if valid else float("nan")
        se = math.sqrt(freq * (1 - freq) / valid) if valid else float("nan")
        selected = _summarize_selected([info for rej_, info in outcomes if rej_ is not None])
        cells.append(
            LevelCell(config.process, config.n, label, rej, valid, failures, freq, se, selected)
        )
    return LevelReport(tuple(cells), config.replicates, config.alpha, config.base_seed)


@dataclass(frozen=True)
class OrderCurve:
    orders: np.ndarray
    levels: np.ndarray
    mc_se: np.ndarray
    aic_orders: np.ndarray  # one AIC-selected order per replicate
    replicates: int

    def aic_histogram(self) -> dict[int, int]:
        counts = Counter(int(v) for v in self.aic_orders)
        return {k: counts[k] for k in sorted(counts)}


def level_vs_order_curve(
    process: str,
    n: int,
    max_order: int | None = None,
    replicates: int = 500,
    base_seed: int = 20240101,
    alpha: float = 0.05,
    orders=None,
    design: DesignSpec = DesignSpec(),
    workers: int = 1,
) -> OrderCurve:
    """Level of the fitAR test for each forced AR order, plus AIC's choices.

    ``orders`` overrides ``range(1, max_order + 1)`` when only a few orders
    are needed.
    """
    if orders is None:
        if max_order is None or not 1 <= max_order <= 50:
            raise UsageError("max_order must lie in [1, 50]")
        orders = range(1, max_order + 1)
    orders = np.array(sorted(set(int(o) for o in orders)))
    if orders.size == 0 or orders[0] < 0 or orders[-1] > 50:
        raise UsageError("orders must lie in [0, 50]")
    config = ExperimentConfig(
        process, n, replicates, (), alpha, base_seed, design, include_fisher=False
    )
    aic_max = default_ar_max_order(n)
    top = max(int(orders[-1]), aic_max)

    def one(r):
        fit = fit_ols(simulate_null_data(config, r))
        acv = empirical_autocov(fit.residuals, top)
        aic_order = int(np.argmin(aic_curve(acv, aic_max)))
        rejects = np.zeros(orders.size, dtype=bool)
        for i, order in enumerate(orders):
            model = fit_ar_from_autocov(acv, int(order))
            plug = plugin_covariance(fit, ar_theoretical_autocov(model, n - 1), "fitAR", order)
            c, projected = pd_projection(plug.c_hat)
            chi = overall_significance(fit, plug.with_updates(c_hat=c, projected=projected))
            rejects[i] = chi.p_value < alpha
        return rejects, aic_order

    results = _map_replicates(one, replicates, workers)
    rej = np.array([r for r, _ in results], dtype=float)
    levels = rej.mean(axis=0)
    se = np.sqrt(levels * (1 - levels) / replicates)
    return OrderCurve(orders, levels, se, np.array([a for _, a in results]), replicates)
