"""Residual-based estimators of the error covariance and the plug-in they feed.

Each ``method_*`` function maps an :class:`OlsFit` to a :class:`CovPlugin`.
The automatic selectors (AIC order, bootstrap lag, Efromovich lag, Andrews
bandwidth, slope-heuristic dimension) are exposed separately so they can be
tested and plotted on their own. Ties always go to the smaller model.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
import scipy.signal
from numpy.lib.stride_tricks import sliding_window_view

from .autocov import (
    AutocovSequence,
    KernelSpec,
    empirical_autocov,
    kernel_eval,
    min_eigenvalue,
    pd_projection,
    tapered_sequence,
)
from .errors import (
    BlockTooSmall,
    DegenerateVariance,
    InvalidOrder,
    LagOutOfRange,
    NotCausal,
    UsageError,
)
from .ols_core import CovPlugin, OlsFit, plugin_covariance

METHODS = ("fitAR", "kernel", "efromovich", "hac", "spectralproj", "select", "manual")
_METHOD_LOOKUP = {m.lower(): m for m in METHODS}

ANDREWS_QS_CONSTANT = 1.3221


# ---------------------------------------------------------------------------
# autoregressive fitting


@dataclass(frozen=True)
class ArModel:
    """Causal AR(p): e_i = sum_j phi_j e_{i-j} + W_i, Var(W) = sigma2."""

    order: int
    phi: np.ndarray
    sigma2: float

    def __post_init__(self):
        phi = np.array(self.phi, dtype=float, ndmin=1)
        if phi.size != self.order:
            raise ValueError(f"order {self.order} but {phi.size} coefficients")
        if not self.sigma2 > 0:
            raise DegenerateVariance("innovation variance must be positive")
        phi.setflags(write=False)
        object.__setattr__(self, "phi", phi)

    def spectral_radius(self) -> float:
        if self.order == 0:
            return 0.0
        companion = np.zeros((self.order, self.order))
        companion[0] = self.phi
        companion[1:, :-1] = np.eye(self.order - 1)
        return float(np.max(np.abs(np.linalg.eigvals(companion))))


class LevinsonResult(NamedTuple):
    phis: list  # phis[p] = coefficient vector of the order-p fit
    sigma2: np.ndarray  # innovation variance per order 0..max_order
    reflection: np.ndarray  # partial autocorrelations, reflection[0] = 1


def levinson_durbin(gamma, max_order: int) -> LevinsonResult:
    """Solve the Yule-Walker equations for every order up to ``max_order``."""
    g = np.asarray(gamma, dtype=float)
    if g[0] <= 0:
        raise DegenerateVariance("lag-0 autocovariance is not positive")
    if max_order > g.size - 1:
        raise InvalidOrder(f"order {max_order} needs {max_order + 1} autocovariances")
    phis = [np.zeros(0)]
    sigma2 = np.empty(max_order + 1)
    refl = np.empty(max_order + 1)
    sigma2[0] = g[0]
    refl[0] = 1.0
    phi = np.zeros(0)
    for m in range(1, max_order + 1):
        if sigma2[m - 1] <= 0:
            raise DegenerateVariance(f"prediction variance vanished at order {m - 1}")
        kappa = (g[m] - phi @ g[m - 1 : 0 : -1]) / sigma2[m - 1]
        phi = np.concatenate([phi - kappa * phi[::-1], [kappa]])
        sigma2[m] = sigma2[m - 1] * (1.0 - kappa * kappa)
        refl[m] = kappa
        phis.append(phi)
    return LevinsonResult(phis, sigma2, refl)


def fit_ar_from_autocov(acv: AutocovSequence | np.ndarray, order: int) -> ArModel:
    g = acv.gamma if isinstance(acv, AutocovSequence) else np.asarray(acv, float)
    if order < 0:
        raise InvalidOrder("AR order must be non-negative")
    if g[0] <= 0:
        raise DegenerateVariance("lag-0 autocovariance is not positive")
    lev = levinson_durbin(g, order)
    s2 = float(lev.sigma2[order])
    if not s2 > 0:
        raise DegenerateVariance(f"AR({order}) fit has zero innovation variance")
    return ArModel(order, lev.phis[order], s2)


def fit_ar_yule_walker(residuals, order: int) -> ArModel:
    """Yule-Walker AR fit by Levinson-Durbin on divisor-n autocovariances."""
    e = np.asarray(residuals, dtype=float)
    if not 0 <= order < e.size:
        raise InvalidOrder(f"AR order {order} outside [0, {e.size - 1}]")
    return fit_ar_from_autocov(empirical_autocov(e, order), order)


def aic_curve(acv: AutocovSequence, max_order: int) -> np.ndarray:
    """n ln(sigma2_p) + 2p for p = 0..max_order."""
    lev = levinson_durbin(acv.gamma, max_order)
    with np.errstate(divide="ignore"):
        return acv.n_source * np.log(lev.sigma2) + 2.0 * np.arange(max_order + 1)


def select_ar_order_aic(residuals, max_order: int) -> int:
    e = np.asarray(residuals, dtype=float)
    if max_order < 0 or max_order >= e.size / 2:
        raise InvalidOrder(f"max_order={max_order} must be in [0, n/2)")
    if max_order == 0:
        return 0
    aic = aic_curve(empirical_autocov(e, max_order), max_order)
    return int(np.argmin(aic))


def ar_theoretical_autocov(model: ArModel, max_lag: int) -> AutocovSequence:
    """Autocovariances gamma(0..max_lag) of a causal AR model."""
    if model.spectral_radius() >= 1.0:
        raise NotCausal(f"AR coefficients {model.phi} are not causal")
    p = model.order
    phi = model.phi
    a = np.eye(p + 1)
    for k in range(p + 1):
        for j in range(1, p + 1):
            a[k, abs(k - j)] -= phi[j - 1]
    rhs = np.zeros(p + 1)
    rhs[0] = model.sigma2
    head = np.linalg.solve(a, rhs)
    if max_lag <= p:
        return AutocovSequence(head[: max_lag + 1], max_lag + 1)
    out = np.empty(max_lag + 1)
    out[: p + 1] = head
    if p == 0:
        out[1:] = 0.0
    else:
        den = np.concatenate([[1.0], -phi])
        zi = scipy.signal.lfiltic([1.0], den, head[:0:-1])
        out[p + 1 :], _ = scipy.signal.lfilter(
            [1.0], den, np.zeros(max_lag - p), zi=zi
        )
    return AutocovSequence(out, max_lag + 1)


def default_ar_max_order(n: int) -> int:
    return max(0, min(int(math.floor(10.0 * math.log10(n))), math.ceil(n / 2) - 1))


# ---------------------------------------------------------------------------
# bandwidth selectors


class BandwidthChoice(NamedTuple):
    lag: int
    risk: np.ndarray


def lag_weights(kernel: KernelSpec, lags: np.ndarray, n_candidates: int) -> np.ndarray:
    """Row m holds the taper applied to ``lags`` when lag m is kept (h = m + 1)."""
    rows = []
    for m in range(n_candidates):
        seq = tapered_sequence(
            AutocovSequence(np.ones(lags.size), lags.size), kernel.with_bandwidth(m + 1)
        )
        rows.append(seq.gamma)
    return np.array(rows)


def bootstrap_bandwidth(
    residuals,
    kernel: KernelSpec,
    model_max: int,
    block_size: int,
    block_n: int,
    rng: np.random.Generator,
) -> BandwidthChoice:
    """Block-bootstrap risk of each candidate lag 0..model_max.

    Each of ``block_n`` contiguous blocks of length ``block_size`` is drawn
    uniformly; the risk of lag m is the mean over blocks of
    sum_k (K(k/(m+1)) gamma_block[k] - gamma_full[k])^2, k = 0..model_max.
    """
    e = np.asarray(residuals, dtype=float)
    n = e.size
    if block_size > n or block_size < 2:
        raise BlockTooSmall(f"block_size={block_size} must lie in [2, n={n}]")
    if block_n < 1:
        raise BlockTooSmall("block_n must be at least 1")
    if not 0 <= model_max <= block_size - 1:
        raise BlockTooSmall(f"model_max={model_max} exceeds block_size - 1")
    target = empirical_autocov(e, model_max).gamma
    starts = rng.integers(0, n - block_size + 1, size=block_n)
    blocks = sliding_window_view(e, block_size)[starts]
    gb = np.empty((block_n, model_max + 1))
    for k in range(model_max + 1):
        gb[:, k] = np.einsum("ij,ij->i", blocks[:, : block_size - k], blocks[:, k:])
    gb /= block_size
    w = lag_weights(kernel, np.arange(model_max + 1), model_max + 1)
    diff = w[:, None, :] * gb[None, :, :] - target[None, None, :]
    risk = np.mean(np.sum(diff * diff, axis=2), axis=1)
    return BandwidthChoice(int(np.argmin(risk)), risk)


def efromovich_j(n: int, r: float) -> float:
    """J = log(n)/(2r) * (1 + log(n)^(-1/2))."""
    ln = math.log(n)
    if math.isinf(r):
        return 0.0
    return ln / (2.0 * r) * (1.0 + ln**-0.5)


def estimate_regularity(residuals) -> float:
    """Decay index r from a log-linear fit ln|gamma_k| ~ a - k/(2r).

    Uses lags 0..K where K is the last lag before |gamma_k| first drops below
    2 gamma_0 / sqrt(n). Returns inf when no lag beyond 0 qualifies and a tiny
    positive value when the fitted decay is not negative.
    """
    e = np.asarray(residuals, dtype=float)
    n = e.size
    acv = empirical_autocov(e, min(n - 1, max(1, n // 4)))
    g = np.abs(acv.gamma)
    if g[0] <= 0:
        raise DegenerateVariance("residual variance is zero")
    small = np.nonzero(g[1:] <= 2.0 * g[0] / math.sqrt(n))[0]
    last = small[0] if small.size else g.size - 1
    if last < 1:
        return math.inf
    k = np.arange(last + 1, dtype=float)
    slope = np.polyfit(k, np.log(g[: last + 1]), 1)[0]
    if slope >= 0:
        return 1e-12
    return -1.0 / (2.0 * slope)


def efromovich_lag(residuals, r: float | str = 1.0, model_max: int | None = None) -> int:
    """floor(J_nr) clamped to [1, model_max]; ``r="estimate"`` fits r from data."""
    n = np.asarray(residuals).size
    if n < 8:
        raise LagOutOfRange("Efromovich's lag needs n >= 8")
    if model_max is None:
        model_max = n - 1
    if r == "estimate":
        r = estimate_regularity(residuals)
    j = efromovich_j(n, float(r))
    lag = int(math.floor(j)) if math.isfinite(j) else model_max
    return max(1, min(lag, model_max))


def andrews_bandwidth(phi: float, n: int) -> float:
    """Quadratic-spectral bandwidth 1.3221 (alpha(2) n)^(1/5), AR(1) plug-in."""
    if abs(1.0 - phi) < 1e-6:
        raise DegenerateVariance("AR(1) coefficient numerically equal to 1")
    alpha2 = 4.0 * phi * phi / (1.0 - phi) ** 4
    return ANDREWS_QS_CONSTANT * (alpha2 * n) ** 0.2


# ---------------------------------------------------------------------------
# spectral projection on histogram functions


@dataclass(frozen=True)
class SpectralProjection:
    """Coefficients of the spectral density on sqrt(d/pi) 1[pi j/d, pi (j+1)/d)."""

    dimension: int
    coeffs: np.ndarray

    def density(self) -> tuple[np.ndarray, np.ndarray]:
        """Bin left edges on [0, pi) and the density value on each bin."""
        d = self.dimension
        edges = np.pi * np.arange(d) / d
        return edges, self.coeffs * math.sqrt(d / math.pi)

    def gamma0(self) -> float:
        return 2.0 * math.sqrt(math.pi / self.dimension) * float(np.sum(self.coeffs))


def _sinpi_ratio(num: np.ndarray, d: int) -> np.ndarray:
    """sin(pi * num / d) for integer ``num``, exact at multiples of pi."""
    rem = np.mod(num, 2 * d)
    out = np.sin(np.pi * rem / d)
    out[(rem == 0) | (rem == d)] = 0.0
    return out


def _bin_sine_differences(d: int, lags: np.ndarray) -> np.ndarray:
    """Row j: sin(pi (j+1) r / d) - sin(pi j r / d) over ``lags``."""
    j = np.arange(d + 1)[:, None]
    s = _sinpi_ratio(j * lags[None, :], d)
    return s[1:] - s[:-1]


def spectral_proj_coeffs(acv: AutocovSequence, d: int) -> SpectralProjection:
    if d < 1:
        raise InvalidOrder("dimension must be at least 1")
    g = acv.gamma
    r = np.arange(1, g.size)
    diffs = _bin_sine_differences(d, r)
    series = diffs @ (g[1:] / r) if r.size else np.zeros(d)
    coeffs = math.sqrt(d / math.pi) * (g[0] / (2.0 * d) + series / math.pi)
    return SpectralProjection(d, coeffs)


def spectral_reconstruct_autocov(proj: SpectralProjection, max_lag: int) -> AutocovSequence:
    d = proj.dimension
    out = np.empty(max_lag + 1)
    out[0] = proj.gamma0()
    if max_lag >= 1:
        k = np.arange(1, max_lag + 1)
        diffs = _bin_sine_differences(d, k)
        out[1:] = 2.0 / k * math.sqrt(d / math.pi) * (proj.coeffs @ diffs)
    return AutocovSequence(out, max_lag + 1)


class DimensionChoice(NamedTuple):
    d: int
    contrast: np.ndarray  # index d-1
    crit: np.ndarray
    penalty_constant: float


def select_spectral_dim(acv: AutocovSequence, model_max: int, n: int) -> DimensionChoice:
    """Minimise -sum_j a_j^2 + c d / n, c from the slope heuristic.

    The slope of the contrast against d/n is fitted by least squares over the
    upper half of the dimensions and the penalty constant is twice its
    absolute value.
    """
    if model_max <= 1:
        c1 = -float(np.sum(spectral_proj_coeffs(acv, 1).coeffs ** 2))
        return DimensionChoice(1, np.array([c1]), np.array([c1]), 0.0)
    dims = np.arange(1, model_max + 1)
    contrast = np.array(
        [-float(np.sum(spectral_proj_coeffs(acv, int(d)).coeffs ** 2)) for d in dims]
    )
    upper = dims >= max(1, model_max // 2)
    slope = np.polyfit(dims[upper] / n, contrast[upper], 1)[0]
    c = 2.0 * abs(slope)
    crit = contrast + c * dims / n
    return DimensionChoice(int(dims[np.argmin(crit)]), contrast, crit, c)


# ---------------------------------------------------------------------------
# configuration and dispatch


@dataclass(frozen=True)
class MethodConfig:
    """Covariance-estimation settings; only fields relevant to ``method`` are read.

    ``model_selec`` is -1 for automatic selection, a non-negative integer for
    a fixed order / lag / dimension, or a list of lags for ``select``.
    """

    method: str = "fitAR"
    model_selec: int | tuple[int, ...] = -1
    kernel: str = "triangle"
    trapeze_delta: float = 0.5
    model_max: int | None = None
    block_size: int | None = None
    block_n: int = 100
    efromovich_r: float | str = 1.0
    user_gamma: np.ndarray | None = field(default=None, compare=False)
    user_matrix: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        key = str(self.method).lower()
        if key not in _METHOD_LOOKUP:
            raise UsageError(f"unknown method {self.method!r}; choose from {METHODS}")
        object.__setattr__(self, "method", _METHOD_LOOKUP[key])
        if isinstance(self.model_selec, (list, tuple)):
            object.__setattr__(self, "model_selec", tuple(int(v) for v in self.model_selec))

    @property
    def label(self) -> str:
        return self.method


def _finish(
    fit: OlsFit,
    gamma: AutocovSequence,
    tag: str,
    selected,
    diagnostics: dict | None = None,
) -> CovPlugin:
    """Plug in, then project onto the positive definite cone when needed."""
    plug = plugin_covariance(fit, gamma, tag, selected)
    c, projected = pd_projection(plug.c_hat)
    c.setflags(write=False)
    return plug.with_updates(c_hat=c, projected=projected, diagnostics=diagnostics or {})


def _residual_acv(fit: OlsFit, max_lag: int) -> AutocovSequence:
    acv = empirical_autocov(fit.residuals, max_lag)
    if acv.gamma[0] <= 0:
        raise DegenerateVariance("residuals are identically zero")
    return acv


def method_fit_ar(fit: OlsFit, config: MethodConfig = MethodConfig()) -> CovPlugin:
    n = fit.n
    sel = config.model_selec
    diagnostics = {}
    if sel == -1:
        max_order = config.model_max if config.model_max is not None else default_ar_max_order(n)
        max_order = min(max_order, math.ceil(n / 2) - 1)
        acv = _residual_acv(fit, max_order)
        aic = aic_curve(acv, max_order)
        order = int(np.argmin(aic))
        diagnostics["aic"] = aic
    else:
        order = int(sel)
        if not 0 <= order < n - 1:
            raise InvalidOrder(f"AR order {order} must lie in [0, n-2] (n={n})")
        acv = _residual_acv(fit, order)
    model = fit_ar_from_autocov(acv, order)
    diagnostics["ar_model"] = model
    gamma = ar_theoretical_autocov(model, n - 1)
    return _finish(fit, gamma, "fitAR", order, diagnostics)


def _kernel_spec(config: MethodConfig, bandwidth: float = 1.0) -> KernelSpec:
    return KernelSpec(config.kernel, bandwidth, config.trapeze_delta)


def method_kernel(
    fit: OlsFit, config: MethodConfig, rng: np.random.Generator | None = None
) -> CovPlugin:
    n = fit.n
    spec = _kernel_spec(config)
    diagnostics = {}
    if config.model_selec == -1:
        block_size = config.block_size or n // 2
        model_max = config.model_max if config.model_max is not None else default_ar_max_order(n)
        model_max = min(model_max, block_size - 1)
        rng = rng if rng is not None else np.random.default_rng(0)
        choice = bootstrap_bandwidth(
            fit.residuals, spec, model_max, block_size, config.block_n, rng
        )
        lag = choice.lag
        diagnostics["risk"] = choice.risk
    else:
        lag = int(config.model_selec)
        if not 0 <= lag <= n - 1:
            raise LagOutOfRange(f"lag {lag} outside [0, {n - 1}]")
    spec = spec.with_bandwidth(lag + 1)
    max_lag = lag if spec.has_compact_support else n - 1
    acv = _residual_acv(fit, max_lag)
    diagnostics["empirical"] = acv
    diagnostics["kernel"] = spec
    return _finish(fit, tapered_sequence(acv, spec), "kernel", lag, diagnostics)


def method_efromovich(fit: OlsFit, config: MethodConfig = MethodConfig("efromovich")) -> CovPlugin:
    n = fit.n
    if config.model_selec == -1:
        model_max = config.model_max if config.model_max is not None else n - 1
        lag = efromovich_lag(fit.residuals, config.efromovich_r, model_max)
    else:
        lag = int(config.model_selec)
    acv = _residual_acv(fit, lag)
    spec = KernelSpec("rectangular", lag + 1)
    return _finish(fit, tapered_sequence(acv, spec), "efromovich", lag, {"empirical": acv})


def hac_andrews(fit: OlsFit) -> CovPlugin:
    """Quadratic-spectral taper with Andrews' AR(1) plug-in bandwidth."""
    n = fit.n
    acv = _residual_acv(fit, n - 1)
    phi = float(acv.gamma[1] / acv.gamma[0])
    bw = max(1.0, andrews_bandwidth(phi, n))
    tapered = tapered_sequence(acv, KernelSpec("quadratic_spectral", bw))
    return _finish(fit, tapered, "hac", bw, {"ar1": phi})


def method_spectralproj(fit: OlsFit, config: MethodConfig = MethodConfig("spectralproj")) -> CovPlugin:
    n = fit.n
    acv = _residual_acv(fit, n - 1)
    diagnostics = {}
    if config.model_selec == -1:
        model_max = min(config.model_max if config.model_max is not None else 50, n - 1)
        choice = select_spectral_dim(acv, model_max, n)
        d = choice.d
        diagnostics["contrast"] = choice.contrast
        diagnostics["crit"] = choice.crit
    else:
        d = int(config.model_selec)
    proj = spectral_proj_coeffs(acv, d)
    diagnostics["projection"] = proj
    diagnostics["empirical"] = acv
    gamma = spectral_reconstruct_autocov(proj, n - 1)
    return _finish(fit, gamma, "spectralproj", d, diagnostics)


def method_select_lags(fit: OlsFit, lags: Sequence[int]) -> CovPlugin:
    """Keep gamma_0 and the listed lags, zero every other lag."""
    lags = [int(v) for v in lags]
    n = fit.n
    if len(set(lags)) != len(lags):
        raise LagOutOfRange("selected lags must be distinct")
    if any(k < 1 or k >= n for k in lags):
        raise LagOutOfRange(f"selected lags must lie in [1, {n - 1}]")
    keep = sorted({0, *lags})
    acv = _residual_acv(fit, keep[-1])
    mask = np.zeros(acv.gamma.size)
    mask[keep] = 1.0
    masked = AutocovSequence(acv.gamma * mask, acv.n_source)
    return _finish(fit, masked, "select", keep, {"empirical": acv})


def method_manual(fit: OlsFit, gamma=None, matrix=None) -> CovPlugin:
    """Direct plug-in of a user vector or matrix; never projected."""
    if (gamma is None) == (matrix is None):
        raise UsageError("give exactly one of gamma or matrix")
    if gamma is not None:
        g = np.asarray(gamma, dtype=float)
        plug = plugin_covariance(fit, AutocovSequence(g, fit.n), "manual")
    else:
        plug = plugin_covariance(fit, np.asarray(matrix, dtype=float), "manual")
    indefinite = min_eigenvalue(plug.c_hat) <= 0
    if indefinite:
        warnings.warn("manual covariance is not positive definite", RuntimeWarning, stacklevel=2)
    return plug.with_updates(indefinite=indefinite)


def estimate_covariance(
    fit: OlsFit, config: MethodConfig, rng: np.random.Generator | None = None
) -> CovPlugin:
    m = config.method
    if m == "fitAR":
        return method_fit_ar(fit, config)
    if m == "kernel":
        return method_kernel(fit, config, rng)
    if m == "efromovich":
        return method_efromovich(fit, config)
    if m == "hac":
        return hac_andrews(fit)
    if m == "spectralproj":
        return method_spectralproj(fit, config)
    if m == "select":
        sel = config.model_selec
        lags = () if sel == -1 else (sel if isinstance(sel, tuple) else (sel,))
        return method_select_lags(fit, lags)
    return method_manual(fit, gamma=config.user_gamma, matrix=config.user_matrix)
