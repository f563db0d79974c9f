"""Residual autocovariances, lag-window kernels, Toeplitz expansion and the
positive definite spectrum projection."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg as sla

from .errors import InvalidKernel, LagOutOfRange, NoPositiveEigenvalue

KERNELS = ("rectangular", "triangle", "trapeze", "quadratic_spectral", "user")
COMPACT = {"rectangular", "triangle", "trapeze"}
EIGEN_ZERO_TOL = 1e-12


@dataclass(frozen=True)
class AutocovSequence:
    """gamma[k] for k = 0..max_lag, computed from a series of length n_source."""

    gamma: np.ndarray
    n_source: int

    def __post_init__(self):
        g = np.array(self.gamma, dtype=float, ndmin=1)
        if g.ndim != 1 or g.size == 0:
            raise ValueError("gamma must be a non-empty vector")
        g.setflags(write=False)
        object.__setattr__(self, "gamma", g)

    @property
    def max_lag(self) -> int:
        return self.gamma.size - 1

    def padded(self, n: int) -> np.ndarray:
        """Lags 0..n-1, zero beyond max_lag."""
        out = np.zeros(n)
        m = min(n, self.gamma.size)
        out[:m] = self.gamma[:m]
        return out

    def acf(self) -> np.ndarray:
        g0 = self.gamma[0]
        return self.gamma / g0 if g0 > 0 else np.zeros_like(self.gamma)


@dataclass(frozen=True)
class KernelSpec:
    """Lag-window kernel K and bandwidth h.

    ``delta`` only matters for the trapeze kernel. A ``user`` kernel must be
    an even function with K(0) = 1; ``compact`` says whether it vanishes for
    |x| > 1.
    """

    kind: str = "triangle"
    bandwidth: float = 1.0
    delta: float = 0.5
    func: Callable[[np.ndarray], np.ndarray] | None = None
    compact: bool = True

    def __post_init__(self):
        if self.kind not in KERNELS:
            raise InvalidKernel(f"unknown kernel {self.kind!r}")
        if not self.bandwidth > 0:
            raise InvalidKernel("bandwidth must be positive")
        if self.kind == "trapeze" and not 0.0 < self.delta < 1.0:
            raise InvalidKernel("trapeze delta must lie in (0, 1)")
        if self.kind == "user":
            if self.func is None:
                raise InvalidKernel("user kernel needs a function")
            k0 = float(np.asarray(self.func(np.array([0.0])))[0])
            if abs(k0 - 1.0) > 1e-12:
                raise InvalidKernel(f"user kernel must satisfy K(0) = 1, got {k0}")
        elif self.kind == "quadratic_spectral":
            object.__setattr__(self, "compact", False)

    @property
    def has_compact_support(self) -> bool:
        return self.kind in COMPACT or (self.kind == "user" and self.compact)

    def with_bandwidth(self, h: float) -> "KernelSpec":
        return KernelSpec(self.kind, h, self.delta, self.func, self.compact)


def _quadratic_spectral(x: np.ndarray) -> np.ndarray:
    z = 6.0 * np.pi * x / 5.0
    out = np.empty_like(x)
    # the closed form cancels badly near 0; its Taylor series is exact to
    # rounding for |x| < 0.05
    small = np.abs(x) < 0.05
    zs = z[small] ** 2
    out[small] = 1.0 - zs * (1 / 10 - zs * (1 / 280 - zs * (1 / 15120 - zs / 1330560)))
    zb = z[~small]
    out[~small] = 3.0 / zb**2 * (np.sin(zb) / zb - np.cos(zb))
    return out


def kernel_eval(spec: KernelSpec, x):
    """Evaluate K at ``x`` (scalar or array)."""
    arr = np.abs(np.asarray(x, dtype=float))
    kind = spec.kind
    if kind == "rectangular":
        out = (arr <= 1.0).astype(float)
    elif kind == "triangle":
        out = np.where(arr <= 1.0, 1.0 - arr, 0.0)
    elif kind == "trapeze":
        d = spec.delta
        out = np.where(arr <= d, 1.0, np.where(arr <= 1.0, (1.0 - arr) / (1.0 - d), 0.0))
    elif kind == "quadratic_spectral":
        out = _quadratic_spectral(np.atleast_1d(arr)).reshape(arr.shape)
    else:
        out = np.asarray(spec.func(arr), dtype=float)
        if spec.compact:
            out = np.where(arr <= 1.0, out, 0.0)
    return float(out) if np.ndim(out) == 0 else out


def empirical_autocov(residuals, max_lag: int) -> AutocovSequence:
    """gamma[k] = (1/n) sum_{j} e_j e_{j+k}, divisor n at every lag."""
    e = np.asarray(residuals, dtype=float)
    n = e.size
    if n == 0:
        raise LagOutOfRange("empty residual series")
    if not 0 <= max_lag <= n - 1:
        raise LagOutOfRange(f"max_lag={max_lag} outside [0, {n - 1}]")
    if max_lag > 64 and max_lag > n // 8:
        full = np.correlate(e, e, mode="full")
        gamma = full[n - 1 : n + max_lag] / n
    else:
        gamma = np.array([e[: n - k] @ e[k:] for k in range(max_lag + 1)]) / n
    return AutocovSequence(gamma, n)


def tapered_sequence(acv: AutocovSequence, spec: KernelSpec) -> AutocovSequence:
    """K(k/h) * gamma[k]; compact kernels zero every lag k >= h."""
    k = np.arange(acv.gamma.size, dtype=float)
    w = np.asarray(kernel_eval(spec, k / spec.bandwidth), dtype=float)
    if spec.has_compact_support:
        w = np.where(k < spec.bandwidth, w, 0.0)
    return AutocovSequence(w * acv.gamma, acv.n_source)


def toeplitz_expand(acv: AutocovSequence, n: int) -> np.ndarray:
    """Symmetric n x n matrix with entry (j, l) = gamma[|j - l|]."""
    return sla.toeplitz(acv.padded(n))


def pd_projection(m) -> tuple[np.ndarray, bool]:
    """Replace every non-positive eigenvalue by the smallest positive one.

    Eigenvalues at or below ``EIGEN_ZERO_TOL * sum(|eigenvalues|)`` count as
    non-positive. Returns the rebuilt matrix and whether anything changed.
    """
    m = np.asarray(m, dtype=float)
    m = 0.5 * (m + m.T)
    w, v = np.linalg.eigh(m)
    tol = EIGEN_ZERO_TOL * float(np.sum(np.abs(w)))
    positive = w > tol
    if not np.any(positive):
        raise NoPositiveEigenvalue("matrix has no positive eigenvalue")
    if np.all(positive):
        return m, False
    w = np.where(positive, w, np.min(w[positive]))
    out = (v * w) @ v.T
    return 0.5 * (out + out.T), True


def min_eigenvalue(m) -> float:
    return float(np.linalg.eigvalsh(0.5 * (np.asarray(m) + np.asarray(m).T))[0])
