import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smtjcouple.analog import Polarity
from smtjcouple.device import MagState, mean_dwell_time, preset
from smtjcouple.errors import (
    InvalidConfigurationError,
    NumericalFailureError,
    UnsupportedConfigurationError,
)
from smtjcouple.markov import (
    CoupledPairModel,
    Generator4,
    build_generator,
    correlation_from_distribution,
    joint_dwell_times,
    predict_correlation,
    relaxation_rate,
    slowest_eigenvalue,
    spectrum,
    steady_state,
)
from smtjcouple.simnet import pair_generator, pair_network

g_values = st.floats(min_value=1.0, max_value=20.0)
r_values = st.floats(min_value=1.0, max_value=50.0)


def null_vector_by_svd(q):
    """Independent oracle: left null space from the SVD of Q^T."""
    _, _, vt = np.linalg.svd(q.T)
    v = vt[-1]
    return v / v.sum()


def brute_force_correlation(p):
    """E[s1 s2] - E[s1]E[s2] over the four outcomes, normalized."""
    outcomes = list(itertools.product((-1, 1), repeat=2))
    e1 = sum(pi * a for pi, (a, _) in zip(p, outcomes))
    e2 = sum(pi * b for pi, (_, b) in zip(p, outcomes))
    e12 = sum(pi * a * b for pi, (a, b) in zip(p, outcomes))
    v1 = sum(pi * (a - e1) ** 2 for pi, (a, _) in zip(p, outcomes))
    v2 = sum(pi * (b - e2) ** 2 for pi, (_, b) in zip(p, outcomes))
    return (e12 - e1 * e2) / math.sqrt(v1 * v2)


class TestBuildGenerator:
    def test_uncoupled(self):
        gen = build_generator(CoupledPairModel(tau01=2.0, r=3.0))
        q = gen.q
        assert q[0, 2] == pytest.approx(0.5)
        assert q[0, 1] == pytest.approx(1.5)
        np.testing.assert_allclose(steady_state(gen), 0.25, rtol=1e-12)

    def test_positive_polarity_rates(self):
        g, r, tau = 2.5, 4.0, 1.0
        q = build_generator(CoupledPairModel.symmetric(tau, g, r)).q
        # in (P,P) both devices are stabilized: slower escape by g
        assert q[0, 2] == pytest.approx(1 / (g * tau), rel=1e-14)
        assert q[0, 1] == pytest.approx(r / (g * tau), rel=1e-14)
        # in (P,AP) device 1 is pushed towards AP, device 2 towards P
        assert q[1, 3] == pytest.approx(g / tau, rel=1e-14)
        assert q[1, 0] == pytest.approx(g * r / tau, rel=1e-14)

    def test_dwells_from_diagonal(self):
        g, r, tau = 3.0, 2.0, 1e-4
        dw = joint_dwell_times(build_generator(CoupledPairModel.symmetric(tau, g, r)))
        same = tau * g / (1 + r)
        diff = tau / (g * (1 + r))
        np.testing.assert_allclose(dw, [same, diff, diff, same], rtol=1e-13)

    def test_matches_simnet_construction(self):
        """Generator rebuilt from device equations equals the reduced model."""
        dev = preset("smtj1")
        spec = pair_network(dev, dev, gain=0.03, delay=0.0)
        q_sim = pair_generator(spec)
        di = 0.03 * 1.25 / 10e3
        g = math.exp(dev.slope_b * di)
        gen = build_generator(CoupledPairModel.symmetric(dev.tau_balance, g))
        np.testing.assert_allclose(q_sim, gen.q, rtol=1e-12)
        # and directly from the dwell formula
        for s in range(4):
            s1, s2 = s >> 1, s & 1
            i1 = dev.i_balance + (di if s2 else -di)
            assert q_sim[s, s ^ 2] == pytest.approx(1 / mean_dwell_time(dev, MagState(s1), i1), rel=1e-12)

    def test_r_below_one_rejected(self):
        with pytest.raises(InvalidConfigurationError):
            CoupledPairModel(tau01=1.0, r=0.5)
        with pytest.raises(InvalidConfigurationError):
            CoupledPairModel(tau01=1.0, g1=0.9)

    def test_generator_validation(self):
        q = build_generator(CoupledPairModel.symmetric(1.0, 2.0)).q.copy()
        bad = q.copy()
        bad[0, 3] = 0.1
        bad[0, 0] -= 0.1
        with pytest.raises(InvalidConfigurationError):
            Generator4(bad)
        bad = q.copy()
        bad[0, 0] += 1.0
        with pytest.raises(InvalidConfigurationError):
            Generator4(bad)
        with pytest.raises(InvalidConfigurationError):
            Generator4(np.zeros((3, 3)))


class TestSteadyState:
    def test_positive_polarity_v0(self):
        g = 2.7
        p = steady_state(build_generator(CoupledPairModel.symmetric(1.0, g, r=5.0)))
        v = np.array([1, g**-2, g**-2, 1])
        np.testing.assert_allclose(p, v / v.sum(), rtol=1e-12)

    def test_uniform_when_uncoupled(self):
        np.testing.assert_allclose(steady_state(build_generator(CoupledPairModel(1.0))), 0.25, rtol=1e-12)

    def test_negative_polarity_by_brute_force(self):
        g = 3.3
        q = build_generator(CoupledPairModel.symmetric(1.0, g, polarity=Polarity.NEGATIVE)).q
        p = steady_state(Generator4(q))
        np.testing.assert_allclose(p, null_vector_by_svd(q), rtol=1e-10)
        v = np.array([g**-2, 1, 1, g**-2])
        np.testing.assert_allclose(p, v / v.sum(), rtol=1e-12)

    def test_reducible_generator_fails(self):
        q = np.zeros((4, 4))
        q[0, 1] = 1.0
        q[0, 0] = -1.0
        with pytest.raises(NumericalFailureError):
            steady_state(Generator4(q))

    @given(g_values, g_values, r_values, st.sampled_from(list(Polarity)))
    @settings(max_examples=100)
    def test_stationarity(self, g1, g2, r, pol):
        gen = build_generator(CoupledPairModel(1.0, r, g1, g2, pol))
        p = steady_state(gen)
        assert np.all(p > 0)
        assert p.sum() == pytest.approx(1.0, abs=1e-14)
        assert np.max(np.abs(p @ gen.q)) < 1e-12 * max(1.0, np.max(np.abs(gen.q)))

    @given(g_values, r_values)
    def test_row_sums(self, g, r):
        q = build_generator(CoupledPairModel.symmetric(1.0, g, r)).q
        assert np.max(np.abs(q.sum(axis=1))) <= 1e-14 * np.max(np.abs(q)) * 4

    @given(g_values, r_values)
    def test_equal_g_depends_on_g_only(self, g, r):
        a = steady_state(build_generator(CoupledPairModel.symmetric(1.0, g, r)))
        b = steady_state(build_generator(CoupledPairModel.symmetric(7.0, g, 1.0)))
        np.testing.assert_allclose(a, b, rtol=1e-9)

    @given(g_values, r_values, st.sampled_from(list(Polarity)))
    def test_detailed_balance_equal_g(self, g, r, pol):
        q = build_generator(CoupledPairModel.symmetric(1.0, g, r, pol)).q
        p = steady_state(Generator4(q))
        flux = p[:, None] * q
        np.fill_diagonal(flux, 0)
        np.testing.assert_allclose(flux, flux.T, rtol=1e-9, atol=1e-15)

    def test_unequal_g_breaks_reversibility(self):
        q = build_generator(CoupledPairModel(1.0, 1.0, 1.0, 2.0)).q
        forward = q[0, 1] * q[1, 3] * q[3, 2] * q[2, 0]
        backward = q[0, 2] * q[2, 3] * q[3, 1] * q[1, 0]
        assert forward != pytest.approx(backward)


class TestEigen:
    def test_uncoupled_symmetric(self):
        tau = 3e-5
        lam = slowest_eigenvalue(CoupledPairModel.symmetric(tau, 1.0, 1.0))
        assert lam == pytest.approx(-2 / tau, rel=1e-12)
        ev = np.sort(spectrum(build_generator(CoupledPairModel(tau))).real)
        np.testing.assert_allclose(ev, [-4 / tau, -2 / tau, -2 / tau, 0], atol=1e-9 / tau)

    @pytest.mark.parametrize("g", [1.0, 1.7, 4.0, 10.0])
    @pytest.mark.parametrize("r", [1.0, 2.5, 20.0])
    def test_closed_form_vs_eigensolver(self, g, r):
        model = CoupledPairModel.symmetric(1.0, g, r)
        lam = slowest_eigenvalue(model)
        assert lam == pytest.approx(relaxation_rate(build_generator(model)), rel=1e-10)

    def test_unequal_g_unsupported(self):
        with pytest.raises(UnsupportedConfigurationError):
            slowest_eigenvalue(CoupledPairModel(1.0, g1=2.0, g2=3.0))

    @given(g_values, r_values)
    def test_one_zero_eigenvalue(self, g, r):
        ev = spectrum(build_generator(CoupledPairModel.symmetric(1.0, g, r)))
        assert abs(ev[0]) < 1e-10 * max(1.0, r)
        assert np.all(ev[1:].real < 0)

    @given(st.floats(min_value=1.01, max_value=10.0))
    def test_relaxation_time_grows_with_mismatch(self, g):
        # fast device fixed at unit timescale, slow one r times slower
        rs = np.linspace(1, 20, 40)
        times = [-1 / slowest_eigenvalue(CoupledPairModel.symmetric(r, g, r)) for r in rs]
        assert np.all(np.diff(times) > 0)

    @given(st.floats(min_value=1.01, max_value=10.0))
    def test_relaxation_time_grows_with_gain(self, g):
        for r in (1.0, 10.0):
            slow = -1 / slowest_eigenvalue(CoupledPairModel.symmetric(1.0, g * 1.1, r))
            fast = -1 / slowest_eigenvalue(CoupledPairModel.symmetric(1.0, g, r))
            assert slow > fast


class TestCorrelation:
    def test_uncoupled_zero(self):
        assert predict_correlation(build_generator(CoupledPairModel(1.0))) == pytest.approx(0, abs=1e-14)

    def test_g3(self):
        gen = build_generator(CoupledPairModel.symmetric(1.0, 3.0))
        p = steady_state(gen)
        assert predict_correlation(gen) == pytest.approx(0.8, rel=1e-12)
        assert brute_force_correlation(p) == pytest.approx(0.8, rel=1e-12)

    @pytest.mark.parametrize("pol, target", [(Polarity.POSITIVE, 1.0), (Polarity.NEGATIVE, -1.0)])
    def test_large_g_limit(self, pol, target):
        gen = build_generator(CoupledPairModel.symmetric(1.0, 100.0, polarity=pol))
        assert predict_correlation(gen) == pytest.approx(target, abs=1e-3)

    @given(g_values)
    def test_tanh_form(self, g):
        gen = build_generator(CoupledPairModel.symmetric(1.0, g))
        assert predict_correlation(gen) == pytest.approx((1 - g**-2) / (1 + g**-2), abs=1e-12)

    @given(st.lists(st.floats(min_value=0.01, max_value=1.0), min_size=4, max_size=4))
    def test_matches_brute_force(self, w):
        p = np.array(w) / sum(w)
        assert correlation_from_distribution(p) == pytest.approx(brute_force_correlation(p), abs=1e-10)
