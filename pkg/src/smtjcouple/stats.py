"""
Trace statistics: digitization, joint dwell times, correlation, occupancy.

Sampled-series functions take 0/1 arrays on an equal-interval grid.
Event-level functions take :class:`~smtjcouple.simnet.TelegraphTrace`
objects and are exact in continuous time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._validation import check_binary_series, check_finite, check_positive, check_same_length
from .errors import InvalidArgumentError, UndefinedCorrelationError

__all__ = [
    "JointDwellSummary",
    "CorrelationResult",
    "OccupancyEstimate",
    "digitize",
    "run_lengths",
    "joint_dwell_stats",
    "pearson",
    "equilibration_check",
    "joint_code_series",
    "event_joint_dwell_stats",
    "event_occupancy",
    "write_dwell_csv",
    "write_pearson_csv",
]


@dataclass(frozen=True)
class JointDwellSummary:
    mean_dwell: np.ndarray
    counts: np.ndarray
    std_err: np.ndarray

    def as_rows(self, labels=("00", "01", "10", "11")):
        return [
            (lab, float(m), float(e), int(c))
            for lab, m, e, c in zip(labels, self.mean_dwell, self.std_err, self.counts)
        ]


@dataclass(frozen=True)
class CorrelationResult:
    rho: float
    n_samples: int
    std_err: float


@dataclass(frozen=True)
class OccupancyEstimate:
    """Time fraction per joint state with batch-means standard errors."""

    p: np.ndarray
    std_err: np.ndarray
    n_batches: int


def digitize(voltages, threshold: float) -> np.ndarray:
    """1 where the voltage exceeds ``threshold``; ties go low."""
    threshold = check_finite(threshold, "threshold")
    return (np.asarray(voltages, dtype=float) > threshold).astype(np.int8)


def run_lengths(codes: np.ndarray):
    """Split a sequence into maximal constant runs; returns (values, lengths)."""
    codes = np.asarray(codes)
    if codes.size == 0:
        return codes[:0], np.zeros(0, dtype=np.int64)
    starts = np.flatnonzero(np.diff(codes)) + 1
    bounds = np.concatenate([[0], starts, [codes.size]])
    return codes[bounds[:-1]], np.diff(bounds)


def _summarize_runs(values, durations, n_states, exclude):
    keep = np.ones(values.size, dtype=bool)
    if exclude and values.size:
        keep[0] = keep[-1] = False
    mean = np.full(n_states, np.nan)
    err = np.full(n_states, np.nan)
    counts = np.zeros(n_states, dtype=np.int64)
    for s in range(n_states):
        d = durations[keep & (values == s)]
        counts[s] = d.size
        if d.size:
            mean[s] = d.mean()
            err[s] = d.std(ddof=1) / math.sqrt(d.size) if d.size > 1 else 0.0
    return JointDwellSummary(mean, counts, err)


def joint_dwell_stats(a, b, dt: float, exclude_censored: bool = False) -> JointDwellSummary:
    """Mean duration of maximal runs in each joint state ``2*a + b``.

    By default every run counts, so ``sum(counts * mean_dwell)`` is the full
    series duration. ``exclude_censored=True`` drops the runs touching
    either end of the series.
    """
    a = check_binary_series(a, "a")
    b = check_binary_series(b, "b")
    check_same_length(a, b)
    dt = check_positive(dt, "dt")
    if a.size == 0:
        raise InvalidArgumentError("series are empty")
    values, lengths = run_lengths(2 * a.astype(np.int64) + b)
    return _summarize_runs(values, lengths * dt, 4, exclude_censored)


def pearson(a, b) -> CorrelationResult:
    """Sample Pearson coefficient of two binary series.

    ``std_err`` is the Fisher-z standard error ``1/sqrt(n - 3)`` mapped back
    through ``d rho / d z = 1 - rho**2``. It treats samples as independent,
    so it understates the error of strongly autocorrelated traces.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    check_same_length(a, b)
    n = a.size
    if n < 2:
        raise InvalidArgumentError("need at least two samples")
    da = a - a.mean()
    db = b - b.mean()
    sa = math.sqrt(float(da @ da))
    sb = math.sqrt(float(db @ db))
    if sa == 0 or sb == 0:
        raise UndefinedCorrelationError("a series is constant")
    rho = float(np.clip((da @ db) / (sa * sb), -1.0, 1.0))
    se = (1.0 - rho * rho) / math.sqrt(n - 3) if n > 3 else math.inf
    return CorrelationResult(rho, n, se)


def equilibration_check(a, b, dt: float, window: float, n_sigma: float = 3.0) -> bool:
    """True when joint occupancy is stable across the series.

    The series is cut into windows of ``window`` seconds. For each joint
    state the mean occupancy of the first half of the windows is compared
    with that of the second half; the check passes if every difference lies
    within ``n_sigma`` combined standard errors.
    """
    a = check_binary_series(a, "a")
    b = check_binary_series(b, "b")
    check_same_length(a, b)
    dt = check_positive(dt, "dt")
    window = check_positive(window, "window")
    per = max(int(round(window / dt)), 1)
    n_win = a.size // per
    if n_win < 4:
        raise InvalidArgumentError("window must be at most a quarter of the series duration")
    codes = (2 * a[: n_win * per].astype(np.int64) + b[: n_win * per]).reshape(n_win, per)
    occ = np.stack([(codes == s).mean(axis=1) for s in range(4)], axis=1)
    half = n_win // 2
    first, second = occ[:half], occ[half:]
    diff = first.mean(axis=0) - second.mean(axis=0)
    se = np.sqrt(first.var(axis=0, ddof=1) / len(first) + second.var(axis=0, ddof=1) / len(second))
    return bool(np.all(np.abs(diff) <= n_sigma * se + 1e-12))


# -- event-level statistics -------------------------------------------------


def joint_code_series(traces: Sequence):
    """Piecewise-constant joint code of several traces.

    Returns ``(starts, codes, t_end)``; code bit order puts device 0 in the
    most significant position, matching the ``00, 01, 10, 11`` labels.
    """
    if not traces:
        raise InvalidArgumentError("need at least one trace")
    t_end = min(tr.t_end for tr in traces)
    starts = np.unique(np.concatenate([tr.times for tr in traces]))
    starts = starts[starts < t_end]
    n = len(traces)
    codes = np.zeros(starts.size, dtype=np.int64)
    for pos, tr in enumerate(traces):
        idx = np.searchsorted(tr.times, starts, side="right") - 1
        codes |= tr.states[idx].astype(np.int64) << (n - 1 - pos)
    values, lengths = run_lengths(codes)
    run_starts = starts[np.concatenate([[0], np.cumsum(lengths)[:-1]])] if values.size else starts
    return run_starts, values, t_end


def event_joint_dwell_stats(traces: Sequence, exclude_censored: bool = True) -> JointDwellSummary:
    """Exact joint dwell statistics from event traces.

    The first and last joint dwells are censored by the trace boundaries and
    are dropped by default.
    """
    starts, values, t_end = joint_code_series(traces)
    durations = np.diff(np.append(starts, t_end))
    return _summarize_runs(values, durations, 2 ** len(traces), exclude_censored)


def _time_in_runs(lo, hi, x):
    """Total length of the sorted disjoint intervals ``[lo, hi)`` lying below each ``x``."""
    dur = hi - lo
    before = np.concatenate([[0.0], np.cumsum(dur)])
    k = np.searchsorted(lo, x, side="right")  # runs started at or before x
    last = np.maximum(k - 1, 0)
    partial = np.where(k > 0, np.clip(x - lo[last], 0.0, dur[last]), 0.0)
    return before[last] + partial


def event_occupancy(traces: Sequence, n_batches: int = 50, t_start: float = 0.0) -> OccupancyEstimate:
    """Fraction of time in each joint state over ``[t_start, t_end]``.

    Standard errors come from equal-length batch means, which accounts for
    the autocorrelation of the switching process.
    """
    starts, values, t_end = joint_code_series(traces)
    n_states = 2 ** len(traces)
    if not 0 <= t_start < t_end:
        raise InvalidArgumentError("t_start must lie inside the trace")
    edges = np.linspace(t_start, t_end, n_batches + 1)
    ends = np.append(starts[1:], t_end)
    occ = np.zeros((n_batches, n_states))
    for s in range(n_states):
        sel = values == s
        if np.any(sel):
            occ[:, s] = np.diff(_time_in_runs(starts[sel], ends[sel], edges))
    widths = np.diff(edges)
    total = occ.sum(axis=0) / (t_end - t_start)
    occ /= widths[:, None]
    err = occ.std(axis=0, ddof=1) / math.sqrt(n_batches) if n_batches > 1 else np.full(n_states, np.nan)
    return OccupancyEstimate(total, err, n_batches)


# -- export ----------------------------------------------------------------


def write_dwell_csv(path, rows) -> None:
    """Rows of ``(gain, state, mean_dwell_s, stderr_s, count)``."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("gain,state,mean_dwell_s,stderr_s,count\n")
        for gain, state, mean, err, count in rows:
            fh.write(f"{gain!r},{state},{mean!r},{err!r},{count}\n")


def write_pearson_csv(path, rows) -> None:
    """Rows of ``(gain, pearson, stderr, n)``."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("gain,pearson,stderr,n\n")
        for gain, rho, err, n in rows:
            fh.write(f"{gain!r},{rho!r},{err!r},{n}\n")
