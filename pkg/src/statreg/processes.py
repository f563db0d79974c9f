"""Seeded error processes and the simulation design.

All randomness goes through :class:`numpy.random.Generator` (PCG64). A seed
may be an int or an existing generator; replicate streams are derived with
:func:`derive_rng` so that replicate ``r`` of base seed ``s`` is the same no
matter which worker computes it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.signal
from scipy import special

PROCESS_KINDS = ("AR1", "AR12", "MA12", "Nonmixing", "Sysdyn", "iid_student_sq")
_ALIASES = {k.lower(): k for k in PROCESS_KINDS} | {"iid": "iid_student_sq"}

AR12_BURN_IN = 10 * 12 + 100
SYSDYN_BURN_IN = 10_000
MA12_WEIGHTS = np.zeros(13)
MA12_WEIGHTS[[0, 2, 3, 12]] = [1.0, 0.5, 0.3, 0.2]


def as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def derive_rng(base_seed: int, *keys: int) -> np.random.Generator:
    """Independent stream for (base_seed, keys...)."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([base_seed, *keys])))


def canonical_kind(kind: str) -> str:
    try:
        return _ALIASES[kind.lower()]
    except KeyError:
        raise ValueError(f"unknown process {kind!r}; choose from {PROCESS_KINDS}") from None


def gen_ar1(n: int, seed, phi: float = 0.7, return_innovations: bool = False):
    """Gaussian AR(1) e_i = phi e_{i-1} + W_i started from its stationary law."""
    rng = as_rng(seed)
    w = rng.standard_normal(n)
    u = w.copy()
    u[0] = w[0] / math.sqrt(1.0 - phi * phi)
    e = scipy.signal.lfilter([1.0], [1.0, -phi], u)
    return (e, w) if return_innovations else e


def ar12_coefficients() -> np.ndarray:
    phi = np.zeros(12)
    phi[0], phi[11] = 0.5, 0.2
    return phi


def gen_ar12(n: int, seed, burn_in: int = AR12_BURN_IN, return_innovations: bool = False):
    """e_i = 0.5 e_{i-1} + 0.2 e_{i-12} + W_i, started from zeros with burn-in."""
    rng = as_rng(seed)
    w = rng.standard_normal(n + burn_in)
    e = scipy.signal.lfilter([1.0], np.concatenate([[1.0], -ar12_coefficients()]), w)
    if return_innovations:
        return e[burn_in:], w[burn_in:], e[:burn_in]
    return e[burn_in:]


def gen_ma12(n: int, seed, df: float = 10.0):
    """e_i = W_i + 0.5 W_{i-2} + 0.3 W_{i-3} + 0.2 W_{i-12}, W ~ Student t(df)."""
    rng = as_rng(seed)
    w = rng.standard_t(df, size=n + 12)
    return np.convolve(w, MA12_WEIGHTS, mode="valid")


def gen_nonmixing(n: int, seed, sigma2: float = 25.0):
    """Gaussian quantile transform of the chain Z_{i+1} = (Z_i + eta_{i+1}) / 2.

    Z_1 is uniform on [0, 1] and eta is Bernoulli(1/2), so every Z_i is
    uniform and every e_i is N(0, sigma2), yet the chain is not mixing.
    """
    if not sigma2 > 0:
        raise ValueError("sigma2 must be positive")
    rng = as_rng(seed)
    z1 = rng.random()
    eta = rng.integers(0, 2, size=n - 1).astype(float)
    z = np.empty(n)
    z[0] = z1
    if n > 1:
        zi = scipy.signal.lfiltic([0.5], [1.0, -0.5], [z1])
        z[1:], _ = scipy.signal.lfilter([0.5], [1.0, -0.5], eta, zi=zi)
    z = np.clip(z, 1e-15, 1.0 - 1e-15)
    return math.sqrt(sigma2) * special.ndtri(z)


def intermittent_map(x: float, gamma: float = 0.25) -> float:
    """x (1 + 2^g x^g) on [0, 1/2), 2x - 1 on [1/2, 1]."""
    if x < 0.5:
        return x * (1.0 + (2.0 * x) ** gamma)
    return 2.0 * x - 1.0


def gen_sysdyn(n: int, seed, gamma: float = 0.25, burn_in: int = SYSDYN_BURN_IN):
    """Orbit of the intermittent map after a burn-in from a uniform start.

    The invariant measure is only approximated by the burn-in. An orbit that
    collapses onto a fixed point (below 1e-300, or exactly 1) is restarted
    from a fresh uniform draw.
    """
    if not 0.0 < gamma < 0.5:
        raise ValueError("gamma must lie in (0, 1/2)")
    rng = as_rng(seed)
    x = rng.random()
    out = np.empty(n)
    f = intermittent_map
    for i in range(burn_in + n):
        x = f(x, gamma)
        if x < 1e-300 or x >= 1.0:
            x = rng.random()
        if i >= burn_in:
            out[i - burn_in] = x
    return out


def gen_iid_student_sq(n: int, seed, df: float = 10.0):
    """W^2 - E[W^2] with W ~ Student t(df); E[W^2] = df / (df - 2)."""
    rng = as_rng(seed)
    w = rng.standard_t(df, size=n)
    return w * w - df / (df - 2.0)


@dataclass(frozen=True)
class ProcessSpec:
    kind: str
    n: int
    seed: int = 0
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "kind", canonical_kind(self.kind))
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.kind == "Sysdyn" and not 0 < self.params.get("gamma", 0.25) < 0.5:
            raise ValueError("Sysdyn gamma must lie in (0, 1/2)")
        if self.kind == "Nonmixing" and not self.params.get("sigma2", 25.0) > 0:
            raise ValueError("Nonmixing sigma2 must be positive")


_GENERATORS = {
    "AR1": gen_ar1,
    "AR12": gen_ar12,
    "MA12": gen_ma12,
    "Nonmixing": gen_nonmixing,
    "Sysdyn": gen_sysdyn,
    "iid_student_sq": gen_iid_student_sq,
}


def generate_process(kind: str, n: int, seed, **params) -> np.ndarray:
    return _GENERATORS[canonical_kind(kind)](n, seed, **params)


def generate(spec: ProcessSpec, rng=None) -> np.ndarray:
    return generate_process(spec.kind, spec.n, spec.seed if rng is None else rng, **spec.params)


@dataclass(frozen=True)
class DesignSpec:
    kind: str = "mod2"
    n: int = 100
    seed: int = 0
    ar_coeff: float = 0.5

    def __post_init__(self):
        if self.kind != "mod2":
            raise ValueError(f"unknown design {self.kind!r}")
        if self.n < 1:
            raise ValueError("n must be >= 1")


def gen_design_mod2(n: int, seed, ar_coeff: float = 0.5) -> np.ndarray:
    """Columns X1 = log(i) + sin(i) + Z_i and X2 = i, i = 1..n (no intercept).

    Z is a stationary Gaussian AR(1) with unit innovation variance.
    """
    i = np.arange(1, n + 1, dtype=float)
    z = gen_ar1(n, seed, phi=ar_coeff)
    return np.column_stack([np.log(i) + np.sin(i) + z, i])


def generate_design(spec: DesignSpec, rng=None) -> np.ndarray:
    return gen_design_mod2(spec.n, spec.seed if rng is None else rng, spec.ar_coeff)
