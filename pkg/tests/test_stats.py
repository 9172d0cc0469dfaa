import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import gain_for_g
from smtjcouple.device import MagState, preset
from smtjcouple.errors import InvalidArgumentError, UndefinedCorrelationError
from smtjcouple.markov import CoupledPairModel, build_generator, joint_dwell_times, slowest_eigenvalue
from smtjcouple.simnet import TelegraphTrace, pair_network, sample_traces, simulate
from smtjcouple.stats import (
    digitize,
    equilibration_check,
    event_joint_dwell_stats,
    event_occupancy,
    joint_code_series,
    joint_dwell_stats,
    pearson,
    run_lengths,
    write_dwell_csv,
    write_pearson_csv,
)

binary = st.lists(st.integers(0, 1), min_size=5, max_size=200)


def nonconstant_pair():
    return st.integers(5, 200).flatmap(
        lambda n: st.tuples(
            st.lists(st.integers(0, 1), min_size=n, max_size=n),
            st.lists(st.integers(0, 1), min_size=n, max_size=n),
        )
    ).filter(lambda ab: len(set(ab[0])) == 2 and len(set(ab[1])) == 2)


class TestDigitize:
    def test_all_above(self):
        np.testing.assert_array_equal(digitize([1.0, 2.0], 0.5), [1, 1])

    def test_tie_goes_low(self):
        assert digitize([0.5], 0.5)[0] == 0

    def test_rejects_nan_threshold(self):
        with pytest.raises(InvalidArgumentError):
            digitize([1.0], float("nan"))


class TestJointDwell:
    def test_constant_pair(self):
        s = joint_dwell_stats(np.zeros(10), np.zeros(10), 0.1)
        assert s.counts.tolist() == [1, 0, 0, 0]
        assert s.mean_dwell[0] == pytest.approx(1.0)
        assert np.all(np.isnan(s.mean_dwell[1:]))

    def test_alternating(self):
        a = np.zeros(20, dtype=int)
        b = np.tile([0, 1], 10)
        s = joint_dwell_stats(a, b, 0.5)
        assert s.mean_dwell[0] == s.mean_dwell[1] == 0.5
        assert s.counts[0] == s.counts[1] == 10

    def test_censored_option(self):
        a = np.array([0, 0, 1, 1, 1, 0, 0, 0])
        s = joint_dwell_stats(a, np.zeros(8), 1.0, exclude_censored=True)
        assert s.counts.tolist() == [0, 0, 1, 0]
        assert s.mean_dwell[2] == 3.0

    def test_bad_inputs(self):
        with pytest.raises(InvalidArgumentError):
            joint_dwell_stats([0, 1], [0], 1.0)
        with pytest.raises(InvalidArgumentError):
            joint_dwell_stats([0, 2], [0, 1], 1.0)
        with pytest.raises(InvalidArgumentError):
            joint_dwell_stats([0, 1], [0, 1], 0.0)

    @given(nonconstant_pair(), st.floats(min_value=1e-6, max_value=10.0))
    def test_total_time_is_duration(self, ab, dt):
        a, b = ab
        s = joint_dwell_stats(a, b, dt)
        present = s.counts > 0
        total = np.sum(s.counts[present] * s.mean_dwell[present])
        assert total == pytest.approx(len(a) * dt, rel=1e-12)

    @given(nonconstant_pair(), st.floats(min_value=1e-6, max_value=10.0))
    def test_quantization_floor(self, ab, dt):
        s = joint_dwell_stats(*ab, dt)
        assert np.all(s.mean_dwell[s.counts > 0] >= dt * (1 - 1e-12))

    def test_matches_markov_on_fine_grid(self):
        dev = preset("smtj3")
        g = 2.0
        traces = simulate(pair_network(dev, dev, gain=gain_for_g(dev, g), delay=0.0), 0.5, seed=3)
        pred = joint_dwell_times(build_generator(CoupledPairModel.symmetric(dev.tau_balance, g)))
        dt = 0.01 * pred.min()
        _, mat = sample_traces(traces, dt)
        s = joint_dwell_stats(mat[:, 0], mat[:, 1], dt, exclude_censored=True)
        np.testing.assert_allclose(s.mean_dwell, pred, rtol=0.05)


class TestPearson:
    def test_identical(self):
        a = np.array([0, 1, 1, 0, 1])
        assert pearson(a, a).rho == pytest.approx(1.0)

    def test_complement(self):
        a = np.array([0, 1, 1, 0, 1])
        assert pearson(a, 1 - a).rho == pytest.approx(-1.0)

    def test_constant_is_undefined(self):
        with pytest.raises(UndefinedCorrelationError):
            pearson([1, 1, 1], [0, 1, 0])

    def test_matches_numpy(self, rng):
        a = rng.integers(0, 2, 1000)
        b = (a ^ (rng.random(1000) < 0.3)).astype(int)
        assert pearson(a, b).rho == pytest.approx(np.corrcoef(a, b)[0, 1], rel=1e-12)

    def test_independent_simulations(self):
        dev = preset("smtj3")
        spec = pair_network(dev, dev, gain=0.0)
        a = simulate(spec, 1.0, seed=21)[0]
        b = simulate(spec, 1.0, seed=22)[1]
        _, mat = sample_traces([a, b], 1e-6)
        assert mat.shape[0] == 1_000_000
        assert abs(pearson(mat[:, 0], mat[:, 1]).rho) < 0.01

    @given(nonconstant_pair())
    @settings(max_examples=100)
    def test_symmetries(self, ab):
        a, b = np.array(ab[0]), np.array(ab[1])
        rho = pearson(a, b).rho
        assert pearson(b, a).rho == pytest.approx(rho, abs=1e-12)
        assert pearson(1 - a, 1 - b).rho == pytest.approx(rho, abs=1e-12)
        assert pearson(1 - a, b).rho == pytest.approx(-rho, abs=1e-12)


class TestEquilibration:
    def test_stationary(self, rng):
        a = rng.integers(0, 2, 100_000)
        b = rng.integers(0, 2, 100_000)
        assert equilibration_check(a, b, 1.0, 1000.0)

    def test_forced_change(self, rng):
        a = np.concatenate([rng.random(50_000) < 0.2, rng.random(50_000) < 0.8]).astype(int)
        b = rng.integers(0, 2, 100_000)
        assert not equilibration_check(a, b, 1.0, 1000.0)

    def test_window_too_long(self):
        with pytest.raises(InvalidArgumentError):
            equilibration_check(np.zeros(10), np.zeros(10), 1.0, 5.0)

    def test_simulated_pair(self):
        dev = preset("smtj3")
        g = 3.0
        lam = slowest_eigenvalue(CoupledPairModel.symmetric(dev.tau_balance, g))
        duration = 100 / abs(lam)
        traces = simulate(pair_network(dev, dev, gain=gain_for_g(dev, g), delay=0.0), 100 * duration, seed=6)
        dt = dev.tau_balance / 20
        _, mat = sample_traces(traces, dt)
        assert equilibration_check(mat[:, 0], mat[:, 1], dt, duration)


class TestEventLevel:
    def test_joint_codes(self):
        a = TelegraphTrace(0, [0.0, 2.0], [0, 1], 4.0)
        b = TelegraphTrace(1, [0.0, 1.0, 3.0], [0, 1, 0], 4.0)
        starts, codes, t_end = joint_code_series([a, b])
        np.testing.assert_array_equal(starts, [0, 1, 2, 3])
        np.testing.assert_array_equal(codes, [0, 1, 3, 2])
        assert t_end == 4.0

    def test_occupancy_exact(self):
        a = TelegraphTrace(0, [0.0, 2.0], [0, 1], 4.0)
        b = TelegraphTrace(1, [0.0, 1.0, 3.0], [0, 1, 0], 4.0)
        occ = event_occupancy([a, b], n_batches=4)
        np.testing.assert_allclose(occ.p, 0.25)
        # each state fills exactly one of the four batches: std 0.5, over sqrt(4)
        np.testing.assert_allclose(occ.std_err, 0.25)

    def test_dwell_censoring(self):
        a = TelegraphTrace(0, [0.0, 2.0], [0, 1], 4.0)
        b = TelegraphTrace(1, [0.0, 1.0, 3.0], [0, 1, 0], 4.0)
        s = event_joint_dwell_stats([a, b])
        assert s.counts.tolist() == [0, 1, 0, 1]
        assert event_joint_dwell_stats([a, b], exclude_censored=False).counts.tolist() == [1, 1, 1, 1]

    @given(st.lists(st.floats(min_value=0.01, max_value=5.0), min_size=1, max_size=30),
           st.integers(1, 20))
    @settings(max_examples=60)
    def test_occupancy_sums_to_one(self, dwells, n_batches):
        tr = TelegraphTrace.from_dwells(0, MagState.P, dwells)
        occ = event_occupancy([tr], n_batches=n_batches)
        assert occ.p.sum() == pytest.approx(1.0, abs=1e-12)
        ap = sum(dwells[1::2]) / sum(dwells)
        assert occ.p[1] == pytest.approx(ap, abs=1e-9)


def test_csv_writers(tmp_path):
    write_dwell_csv(tmp_path / "d.csv", [(0.01, "00", 1e-4, 1e-6, 10)])
    write_pearson_csv(tmp_path / "p.csv", [(0.01, 0.5, 0.01, 1000)])
    assert (tmp_path / "d.csv").read_text() == "gain,state,mean_dwell_s,stderr_s,count\n0.01,00,0.0001,1e-06,10\n"
    assert (tmp_path / "p.csv").read_text() == "gain,pearson,stderr,n\n0.01,0.5,0.01,1000\n"


def test_run_lengths():
    v, n = run_lengths([3, 3, 1, 1, 1, 2])
    assert v.tolist() == [3, 1, 2] and n.tolist() == [2, 3, 1]
