"""Least-squares fitting and the sandwich plug-in covariance.

The plug-in estimate of the asymptotic covariance of ``D(n)(beta_hat - beta)`` is

    C_hat = D (X'X)^-1 X' Gamma X (X'X)^-1 D

where ``D = diag(||X[:, j]||_2)`` and ``Gamma`` is an n x n estimate of the
error covariance. When ``Gamma`` is given as an autocovariance vector the
product ``Gamma X`` is evaluated as a symmetric convolution, never forming
the n x n matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any, Sequence

import numpy as np
import scipy.linalg as sla
import scipy.signal

from .autocov import AutocovSequence
from .errors import DimensionMismatch, InvalidData, NotSymmetric, RankDeficient

RANK_TOL = 1e-10
SYMMETRY_TOL = 1e-8


@dataclass(frozen=True)
class RegressionData:
    """Response ``y`` (n,) and design ``x`` (n, p) with column labels."""

    y: np.ndarray
    x: np.ndarray
    column_names: tuple[str, ...] = ()

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        x = np.asarray(self.x, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        if y.ndim != 1:
            raise DimensionMismatch(f"y must be one-dimensional, got shape {y.shape}")
        if x.ndim != 2 or x.shape[0] != y.shape[0]:
            raise DimensionMismatch(
                f"x has {x.shape[0]} rows but y has length {y.shape[0]}"
            )
        n, p = x.shape
        if p < 1 or n <= p:
            raise InvalidData(f"need n > p >= 1, got n={n}, p={p}")
        if not (np.all(np.isfinite(y)) and np.all(np.isfinite(x))):
            raise InvalidData("non-finite entries in y or x")
        names = tuple(self.column_names) or tuple(f"x{j + 1}" for j in range(p))
        if len(names) != p:
            raise DimensionMismatch(f"{len(names)} column names for {p} columns")
        y.setflags(write=False)
        x.setflags(write=False)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "column_names", names)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]

    @property
    def has_intercept(self) -> bool:
        return bool(np.all(self.x[:, 0] == 1.0))

    @classmethod
    def with_intercept(cls, y, x, column_names: Sequence[str] = ()):
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        names = tuple(column_names) or tuple(f"x{j + 1}" for j in range(x.shape[1]))
        full = np.column_stack([np.ones(x.shape[0]), x])
        return cls(y, full, ("(Intercept)",) + names)


@dataclass(frozen=True)
class OlsFit:
    data: RegressionData
    beta_hat: np.ndarray
    residuals: np.ndarray
    d_n: np.ndarray
    xtx_inv: np.ndarray
    rss: float
    r_squared: float

    @property
    def n(self) -> int:
        return self.data.n

    @property
    def p(self) -> int:
        return self.data.p

    @property
    def x(self) -> np.ndarray:
        return self.data.x

    @property
    def fitted(self) -> np.ndarray:
        return self.data.y - self.residuals

    @property
    def sigma_hat(self) -> float:
        """Residual standard error with denominator n - p."""
        return float(np.sqrt(self.rss / (self.n - self.p)))


@dataclass(frozen=True)
class CovPlugin:
    """Plug-in estimate ``c_hat`` of the asymptotic covariance.

    ``selected_param`` holds whatever the method chose (AR order, lag,
    histogram dimension or the list of kept lags). ``gamma`` is the
    autocovariance sequence that was plugged in, when there was one.
    ``indefinite`` is only ever set by the manual method, which skips the
    positive definite projection.
    """

    c_hat: np.ndarray
    projected: bool
    method_tag: str
    selected_param: Any = None
    gamma: AutocovSequence | None = None
    indefinite: bool = False
    diagnostics: dict = field(default_factory=dict, compare=False)

    def with_updates(self, **kwargs) -> "CovPlugin":
        return replace(self, **kwargs)


def fit_ols(data: RegressionData) -> OlsFit:
    """Least squares through a Householder QR of the design."""
    x, y = data.x, data.y
    q, r = np.linalg.qr(x, mode="reduced")
    sv = np.linalg.svd(r, compute_uv=False)
    if sv[0] == 0.0 or sv[-1] / sv[0] < RANK_TOL:
        raise RankDeficient(
            f"design has numerical rank < {data.p} (singular value ratio "
            f"{sv[-1] / sv[0] if sv[0] else 0.0:.3g})"
        )
    qty = q.T @ y
    beta = sla.solve_triangular(r, qty)
    resid = y - q @ qty
    r_inv = sla.solve_triangular(r, np.eye(data.p))
    xtx_inv = r_inv @ r_inv.T
    xtx_inv = 0.5 * (xtx_inv + xtx_inv.T)
    rss = float(resid @ resid)
    if data.has_intercept:
        tss = float(np.sum((y - y.mean()) ** 2))
    else:
        tss = float(y @ y)
    r2 = 1.0 if tss == 0.0 else min(1.0, max(0.0, 1.0 - rss / tss))
    d_n = np.sqrt(np.sum(x * x, axis=0))
    for arr in (beta, resid, d_n, xtx_inv):
        arr.setflags(write=False)
    return OlsFit(data, beta, resid, d_n, xtx_inv, rss, r2)


def toeplitz_matvec(gamma, x: np.ndarray) -> np.ndarray:
    """``T @ x`` for the symmetric Toeplitz matrix with first column ``gamma``.

    ``gamma`` may be shorter than ``x`` has rows; missing lags are zero.
    Cost is O(n m) per column for bandwidth m (FFT-backed when cheaper).
    """
    g = np.asarray(gamma, dtype=float)
    x = np.asarray(x, dtype=float)
    squeeze = x.ndim == 1
    if squeeze:
        x = x[:, None]
    n = x.shape[0]
    m = min(g.size, n) - 1
    g = g[: m + 1]
    kernel = np.concatenate([g[:0:-1], g])
    out = np.empty_like(x)
    for j in range(x.shape[1]):
        full = scipy.signal.convolve(x[:, j], kernel, mode="full")
        out[:, j] = full[m : m + n]
    return out[:, 0] if squeeze else out


def _check_symmetric(m: np.ndarray):
    scale = np.max(np.abs(m)) if m.size else 0.0
    if np.max(np.abs(m - m.T)) > SYMMETRY_TOL * max(scale, np.finfo(float).tiny):
        raise NotSymmetric("covariance matrix is not symmetric")


def sandwich(fit: OlsFit, middle: np.ndarray) -> np.ndarray:
    """D (X'X)^-1 M (X'X)^-1 D for a p x p middle term M = X' Gamma X."""
    bread = fit.xtx_inv * fit.d_n[:, None]
    c = bread @ middle @ bread.T
    return 0.5 * (c + c.T)


def plugin_covariance(
    fit: OlsFit,
    gamma_hat,
    method_tag: str = "plugin",
    selected_param=None,
) -> CovPlugin:
    """Plug-in covariance for an autocovariance vector or a full n x n matrix.

    A 1-D input (or :class:`AutocovSequence`) is read as gamma_0, gamma_1, ...
    of a constant-diagonal matrix; a 2-D input must be n x n and symmetric.
    No positive definite projection is applied here.
    """
    x = fit.x
    acv = None
    if isinstance(gamma_hat, AutocovSequence):
        acv = gamma_hat
        gamma_hat = gamma_hat.gamma
    g = np.asarray(gamma_hat, dtype=float)
    if g.ndim == 1:
        if g.size == 0:
            raise DimensionMismatch("empty autocovariance vector")
        if g.size > fit.n:
            raise DimensionMismatch(
                f"autocovariance vector of length {g.size} exceeds n={fit.n}"
            )
        gx = toeplitz_matvec(g, x)
    elif g.ndim == 2:
        if g.shape != (fit.n, fit.n):
            raise DimensionMismatch(f"covariance matrix must be {fit.n}x{fit.n}")
        _check_symmetric(g)
        gx = g @ x
    else:
        raise DimensionMismatch("gamma_hat must be a vector or a square matrix")
    middle = x.T @ gx
    c = sandwich(fit, 0.5 * (middle + middle.T))
    c.setflags(write=False)
    return CovPlugin(c, False, method_tag, selected_param, gamma=acv)


def classical_covariance(fit: OlsFit, sigma2: float) -> np.ndarray:
    """sigma2 * D (X'X)^-1 D, the i.i.d. special case."""
    c = sigma2 * fit.xtx_inv * np.outer(fit.d_n, fit.d_n)
    return 0.5 * (c + c.T)


def scale_free_check(fit: OlsFit, c: float) -> dict:
    """Refit with ``c * y`` and compare against the original fit."""
    data = fit.data
    scaled = fit_ols(RegressionData(c * data.y, data.x, data.column_names))
    scale = max(float(np.max(np.abs(c * fit.beta_hat))), np.finfo(float).tiny)
    beta_err = float(np.max(np.abs(scaled.beta_hat - c * fit.beta_hat))) / scale
    r2_err = abs(scaled.r_squared - fit.r_squared) / max(fit.r_squared, 1e-300)
    return {
        "beta_rel_error": beta_err,
        "r_squared_rel_error": r2_err,
        "ok": beta_err < 1e-10 and r2_err < 1e-10,
        "fit": scaled,
    }
