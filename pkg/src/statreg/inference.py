"""Z and chi-square statistics built on a plug-in covariance, and the summary."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .autocov import EIGEN_ZERO_TOL
from .errors import DegenerateVariance, InvalidLevel, RankDeficientContrast
from .ols_core import CovPlugin, OlsFit

P_VALUE_FLOOR = 2.2e-16
SIGNIF_LEGEND = "0 '***' 0.001 '**' 0.01 '*' 0.05 '.' 0.1 ' ' 1"


def normal_cdf(x):
    """Phi(x) = erfc(-x / sqrt 2) / 2."""
    return 0.5 * special.erfc(-np.asarray(x, dtype=float) / math.sqrt(2.0))


def normal_sf_two_sided(z):
    """2 (1 - Phi(|z|)) without cancellation."""
    return special.erfc(np.abs(np.asarray(z, dtype=float)) / math.sqrt(2.0))


def normal_quantile(q):
    return special.ndtri(q)


def chi2_cdf(x, k):
    """Regularized lower incomplete gamma P(k/2, x/2)."""
    if k < 1:
        raise ValueError("degrees of freedom must be >= 1")
    return special.gammainc(k / 2.0, np.maximum(np.asarray(x, dtype=float), 0.0) / 2.0)


def chi2_sf(x, k):
    if k < 1:
        raise ValueError("degrees of freedom must be >= 1")
    return special.gammaincc(k / 2.0, np.maximum(np.asarray(x, dtype=float), 0.0) / 2.0)


def f_sf(f, df1, df2):
    """P(F > f) through the regularized incomplete beta."""
    f = max(float(f), 0.0)
    return float(special.betainc(df2 / 2.0, df1 / 2.0, df2 / (df2 + df1 * f)))


@dataclass(frozen=True)
class CoefficientTable:
    names: tuple[str, ...]
    estimate: np.ndarray
    std_error: np.ndarray
    z_value: np.ndarray
    p_value: np.ndarray


@dataclass(frozen=True)
class ChiSquareResult:
    statistic: float
    df: int
    p_value: float
    intercept_excluded: bool = True


def standard_errors(fit: OlsFit, cov: CovPlugin) -> np.ndarray:
    diag = np.diag(cov.c_hat)
    if np.any(diag <= 0):
        bad = [fit.data.column_names[j] for j in np.flatnonzero(diag <= 0)]
        raise DegenerateVariance(f"non-positive variance for {', '.join(bad)}")
    return np.sqrt(diag) / fit.d_n


def z_statistics(fit: OlsFit, cov: CovPlugin) -> CoefficientTable:
    """Z_j = d_j beta_j / sqrt(C_jj) with two-sided normal p-values."""
    se = standard_errors(fit, cov)
    z = fit.beta_hat / se
    return CoefficientTable(
        fit.data.column_names, fit.beta_hat.copy(), se, z, normal_sf_two_sided(z)
    )


def confint(fit: OlsFit, cov: CovPlugin, level: float = 0.95) -> np.ndarray:
    """(p, 2) array of lower/upper bounds."""
    if not 0.0 < level < 1.0:
        raise InvalidLevel(f"level must lie in (0, 1), got {level}")
    q = normal_quantile((1.0 + level) / 2.0)
    half = q * standard_errors(fit, cov)
    return np.column_stack([fit.beta_hat - half, fit.beta_hat + half])


def _inv_sqrt(v: np.ndarray) -> np.ndarray:
    w, u = np.linalg.eigh(0.5 * (v + v.T))
    tol = EIGEN_ZERO_TOL * float(np.sum(np.abs(w)))
    if np.any(w <= tol):
        raise RankDeficientContrast("contrast covariance is not positive definite")
    return (u / np.sqrt(w)) @ u.T


def chi2_test(fit: OlsFit, cov: CovPlugin, a) -> ChiSquareResult:
    """Wald test of A beta = 0 for a k x p contrast matrix A.

    With B = A D^-1 the statistic is ||(B C B')^{-1/2} A beta_hat||^2, which
    for unit-row contrasts equals ||(A C A')^{-1/2} A D beta_hat||^2.
    """
    a = np.atleast_2d(np.asarray(a, dtype=float))
    k, p = a.shape
    if p != fit.p:
        raise RankDeficientContrast(f"contrast has {p} columns, model has {fit.p}")
    if k > p or np.linalg.matrix_rank(a) < k:
        raise RankDeficientContrast("contrast matrix must have full row rank k <= p")
    b = a / fit.d_n[None, :]
    w = _inv_sqrt(b @ cov.c_hat @ b.T) @ (a @ fit.beta_hat)
    stat = float(w @ w)
    return ChiSquareResult(stat, k, float(chi2_sf(stat, k)))


def overall_significance(fit: OlsFit, cov: CovPlugin) -> ChiSquareResult:
    """All non-intercept coefficients zero; without an intercept, all of them."""
    p = fit.p
    if fit.data.has_intercept and p > 1:
        return chi2_test(fit, cov, np.eye(p)[1:])
    res = chi2_test(fit, cov, np.eye(p))
    return ChiSquareResult(res.statistic, res.df, res.p_value, intercept_excluded=False)


# ---------------------------------------------------------------------------
# summary


def format_pvalue(p: float) -> str:
    if p < P_VALUE_FLOOR:
        return "< 2.2e-16"
    if p < 1e-4:
        return f"{p:.2e}"
    return f"{p:.6f}"


def signif_stars(p: float) -> str:
    for cut, mark in ((0.001, "***"), (0.01, "**"), (0.05, "*"), (0.1, ".")):
        if p < cut:
            return mark
    return ""


def _num(v: float, digits: int = 6) -> str:
    return f"{v:.{digits}g}"


def _table(header: list[str], rows: list[list[str]], left_first: bool = True) -> list[str]:
    cols = list(zip(header, *rows))
    widths = [max(len(c) for c in col) for col in cols]
    lines = []
    for row in [header, *rows]:
        cells = []
        for j, (cell, w) in enumerate(zip(row, widths)):
            cells.append(cell.ljust(w) if (j == 0 and left_first) else cell.rjust(w))
        lines.append(" ".join(cells).rstrip())
    return lines


@dataclass(frozen=True)
class SummaryReport:
    text: str
    record: dict


def summary_report(
    fit: OlsFit,
    cov: CovPlugin,
    call: str = "",
    level: float | None = None,
) -> SummaryReport:
    table = z_statistics(fit, cov)
    chi = overall_significance(fit, cov)
    q = np.quantile(fit.residuals, [0.0, 0.25, 0.5, 0.75, 1.0])
    # rounding noise of an exact fit prints as 0
    scale = float(np.max(np.abs(fit.data.y)))
    q = np.where(np.abs(q) <= 1e-12 * scale, 0.0, q)

    lines = []
    if call:
        lines += ["Call:", call, ""]
    lines.append("Residuals:")
    lines += [
        "  " + line
        for line in _table(
            ["Min", "1Q", "Median", "3Q", "Max"], [[_num(v, 5) for v in q]], left_first=False
        )
    ]
    lines += ["", "Coefficients:"]
    rows = []
    for j, name in enumerate(table.names):
        p = float(table.p_value[j])
        rows.append(
            [
                name,
                _num(table.estimate[j]),
                _num(table.std_error[j]),
                f"{table.z_value[j]:.3f}",
                format_pvalue(p),
                signif_stars(p),
            ]
        )
    lines += _table(["", "Estimate", "Std. Error", "z value", "Pr(>|z|)", ""], rows)
    lines += ["---", f"Signif. codes:  {SIGNIF_LEGEND}", ""]
    lines.append(f"Residual standard error: {fit.sigma_hat:.4g}")
    lines.append(f"Multiple R-squared:  {fit.r_squared:.4g}")
    pv = "< 2.2e-16" if chi.p_value < P_VALUE_FLOOR else f"{chi.p_value:.4g}"
    lines.append(f"chi2-statistic: {chi.statistic:.4g} on {chi.df} DF,  p-value: {pv}")
    lines.append(f"Covariance method: {cov.method_tag}, selected: {_selected_str(cov)}")
    if cov.projected:
        lines.append("Note: positive definite projection applied to the covariance estimate")
    if cov.indefinite:
        lines.append("Warning: the covariance estimate is not positive definite")

    record = {
        "names": list(table.names),
        "estimates": table.estimate.tolist(),
        "std_errors": table.std_error.tolist(),
        "z_values": table.z_value.tolist(),
        "p_values": table.p_value.tolist(),
        "chi2": chi.statistic,
        "df": chi.df,
        "p_value_global": chi.p_value,
        "r_squared": fit.r_squared,
        "sigma_hat": fit.sigma_hat,
        "n": fit.n,
        "residual_quantiles": q.tolist(),
        "method": cov.method_tag,
        "selected_param": _selected_json(cov.selected_param),
        "projected": bool(cov.projected),
        "indefinite": bool(cov.indefinite),
    }
    if level is not None:
        ci = confint(fit, cov, level)
        lo, hi = (1 - level) / 2 * 100, (1 + level) / 2 * 100
        lines += ["", "Confidence intervals:"]
        lines += _table(
            ["", f"{lo:g} %", f"{hi:g} %"],
            [[name, _num(ci[j, 0]), _num(ci[j, 1])] for j, name in enumerate(table.names)],
        )
        record["confint"] = {"level": level, "lower": ci[:, 0].tolist(), "upper": ci[:, 1].tolist()}
    return SummaryReport("\n".join(lines) + "\n", record)


def _selected_json(v):
    if v is None:
        return None
    if isinstance(v, (list, tuple)):
        return [int(x) for x in v]
    if isinstance(v, (int, np.integer)):
        return int(v)
    return float(v)


def _selected_str(cov: CovPlugin) -> str:
    v = _selected_json(cov.selected_param)
    if v is None:
        return "none"
    if isinstance(v, list):
        return "{" + ", ".join(str(x) for x in v) + "}"
    if isinstance(v, float):
        return f"{v:.4g}"
    return str(v)
