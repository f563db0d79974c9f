import numpy as np
import pytest
import scipy.signal
from hypothesis import given
from hypothesis import strategies as st

from statreg.autocov import empirical_autocov
from statreg.cov_methods import ArModel, ar_theoretical_autocov
from statreg.processes import (
    MA12_WEIGHTS,
    PROCESS_KINDS,
    DesignSpec,
    ProcessSpec,
    ar12_coefficients,
    derive_rng,
    gen_ar1,
    gen_ar12,
    gen_design_mod2,
    gen_iid_student_sq,
    gen_ma12,
    gen_nonmixing,
    gen_sysdyn,
    generate,
    generate_design,
    generate_process,
    intermittent_map,
)

BIG = 10**6


def acf1(x):
    x = x - x.mean()
    return float(np.dot(x[:-1], x[1:]) / np.dot(x, x))


@pytest.fixture(scope="module")
def ar1_big():
    return gen_ar1(BIG, 101)


class TestAR1:
    def test_variance(self, ar1_big):
        assert np.var(ar1_big) == pytest.approx(1 / 0.51, rel=0.02)

    def test_lag_one(self, ar1_big):
        assert acf1(ar1_big) == pytest.approx(0.7, abs=0.01)

    def test_recursion_reproduces_innovations(self):
        e, w = gen_ar1(500, 3, return_innovations=True)
        assert np.max(np.abs(e[1:] - 0.7 * e[:-1] - w[1:])) < 1e-12
        assert e[0] == pytest.approx(w[0] / np.sqrt(0.51), rel=1e-15)

    def test_stationary_start(self):
        first = np.array([gen_ar1(1, s)[0] for s in range(4000)])
        assert np.var(first) == pytest.approx(1 / 0.51, rel=0.1)


class TestAR12:
    def test_causal(self):
        model = ArModel(12, ar12_coefficients(), 1.0)
        assert model.spectral_radius() < 1

    def test_matches_theory(self):
        e = gen_ar12(BIG, 7)
        got = empirical_autocov(e, 13).gamma
        want = ar_theoretical_autocov(ArModel(12, ar12_coefficients(), 1.0), 13).gamma
        for k in (0, 1, 2, 11, 12, 13):
            assert got[k] == pytest.approx(want[k], rel=0.02), k

    def test_recursion_reproduces_innovations(self):
        e, w, burn = gen_ar12(300, 9, return_innovations=True)
        full = np.concatenate([burn, e])
        phi = ar12_coefficients()
        pred = np.array([phi @ full[i - 12 : i][::-1] for i in range(len(burn), len(full))])
        assert np.max(np.abs(e - pred - w)) < 1e-12


class TestMA12:
    def test_variance(self):
        assert 1.25 * np.sum(MA12_WEIGHTS**2) == pytest.approx(1.725)
        e = gen_ma12(BIG, 11)
        assert np.var(e) == pytest.approx(1.725, rel=0.02)

    def test_thirteen_dependent(self):
        e = gen_ma12(BIG, 12)
        g = empirical_autocov(e, 13).gamma
        se = g[0] / np.sqrt(BIG) * np.sqrt(1 + 2 * np.sum((g[1:13] / g[0]) ** 2))
        assert abs(g[13]) < 3 * se
        # lag 12 carries the 0.2 weight
        assert g[12] == pytest.approx(0.2 * 1.25, rel=0.1)


class TestNonmixing:
    def test_marginal(self):
        e = gen_nonmixing(BIG, 13)
        assert abs(e.mean()) < 0.05
        assert np.var(e) == pytest.approx(25.0, rel=0.02)

    def test_strong_dependence(self):
        assert acf1(gen_nonmixing(BIG, 14)) > 0.5

    def test_chain(self):
        # the binary expansion is shifted in, so Z_{i+1} = (Z_i + eta)/2
        from scipy.special import ndtr

        z = ndtr(gen_nonmixing(200, 5, sigma2=1.0))
        eta = 2 * z[1:] - z[:-1]
        assert np.allclose(eta, np.round(eta), atol=1e-9)
        assert set(np.round(eta).astype(int)) <= {0, 1}

    def test_bad_sigma(self):
        with pytest.raises(ValueError):
            gen_nonmixing(10, 0, sigma2=0.0)


class TestSysdyn:
    def test_map_values(self):
        assert intermittent_map(0.75) == 0.5
        assert intermittent_map(0.25) == pytest.approx(0.25 * (1 + 0.5**0.25), abs=1e-15)
        assert intermittent_map(0.25) == pytest.approx(0.46022, abs=1e-5)

    @given(st.floats(0.0, 1.0))
    def test_map_stays_in_unit_interval(self, x):
        assert 0.0 <= intermittent_map(x) <= 1.0

    def test_orbit(self):
        x = gen_sysdyn(2000, 4, burn_in=500)
        assert np.all((x >= 0) & (x <= 1))
        follows = [intermittent_map(a) for a in x[:-1]]
        assert np.mean(np.isclose(follows, x[1:], rtol=0, atol=1e-15)) > 0.99

    def test_gamma_range(self):
        with pytest.raises(ValueError):
            gen_sysdyn(10, 0, gamma=0.5)


class TestIid:
    def test_centered(self):
        e = gen_iid_student_sq(BIG, 15)
        assert abs(e.mean()) < 0.01

    def test_uncorrelated(self):
        e = gen_iid_student_sq(BIG, 16)
        g = empirical_autocov(e, 1).gamma
        assert abs(g[1]) < 3 * g[0] / np.sqrt(BIG)


class TestSeeding:
    @pytest.mark.parametrize("kind", PROCESS_KINDS)
    def test_deterministic(self, kind):
        a = generate(ProcessSpec(kind, 300, 42, {"burn_in": 50} if kind == "Sysdyn" else {}))
        b = generate_process(kind, 300, 42, **({"burn_in": 50} if kind == "Sysdyn" else {}))
        assert a.tobytes() == b.tobytes()
        assert a.shape == (300,) and np.all(np.isfinite(a))

    @pytest.mark.parametrize("kind", ["AR1", "MA12", "iid_student_sq", "Nonmixing"])
    def test_distinct_seeds_independent(self, kind):
        a = generate_process(kind, 10**4, derive_rng(1, 0))
        b = generate_process(kind, 10**4, derive_rng(1, 1))
        assert abs(np.corrcoef(a, b)[0, 1]) < 0.05

    def test_derived_streams(self):
        a = derive_rng(5, 3, 1).standard_normal(4)
        assert np.array_equal(a, derive_rng(5, 3, 1).standard_normal(4))
        assert not np.array_equal(a, derive_rng(5, 1, 3).standard_normal(4))

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            ProcessSpec("AR1", 0)
        with pytest.raises(ValueError):
            ProcessSpec("garch", 10)
        with pytest.raises(ValueError):
            ProcessSpec("Sysdyn", 10, params={"gamma": 0.7})
        with pytest.raises(ValueError):
            ProcessSpec("Nonmixing", 10, params={"sigma2": -1.0})
        assert ProcessSpec("iid", 10).kind == "iid_student_sq"


class TestDesign:
    def test_columns(self):
        x = gen_design_mod2(50, 8)
        i = np.arange(1, 51, dtype=float)
        assert np.array_equal(x[:, 1], i)
        z = x[:, 0] - np.log(i) - np.sin(i)
        # Z is the AR(1) with coefficient 0.5
        w = scipy.signal.lfilter([1.0, -0.5], [1.0], z)
        assert np.allclose(w[1:], np.random.default_rng(8).standard_normal(50)[1:], atol=1e-12)

    def test_zero_coefficient_is_white(self):
        i = np.arange(1, 21, dtype=float)
        z = gen_design_mod2(20, 1, ar_coeff=0.0)[:, 0] - np.log(i) - np.sin(i)
        assert np.allclose(z, np.random.default_rng(1).standard_normal(20), atol=1e-12)

    def test_spec(self):
        a = generate_design(DesignSpec(n=30, seed=2))
        assert a.tobytes() == gen_design_mod2(30, 2).tobytes()
        with pytest.raises(ValueError):
            DesignSpec(kind="mod3")
