"""
Event-driven simulation of junctions coupled through interaction pipelines.

The kernel is exact in continuous time. Each device holds an exponential
switching clock at the rate set by its current drive. When device ``k``
switches at time ``t`` the devices it drives see the new state at
``t + delay``; at that instant their currents change and their clocks are
redrawn (valid because dwell times are memoryless). Fixed-step views are
produced afterwards by :func:`sample_trace`.
"""

from __future__ import annotations

import math
import warnings
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .analog import PipelineConfig, Polarity, delta_current
from .device import MagState, SmtjParams, resistance
from .errors import BreakdownError, InvalidArgumentError, InvalidConfigurationError

__all__ = [
    "DEFAULT_DELAY",
    "SquareWave",
    "NetworkSpec",
    "SimEvent",
    "TelegraphTrace",
    "BiasMismatchWarning",
    "pair_network",
    "ising_network",
    "effective_current",
    "pair_generator",
    "simulate",
    "sample_trace",
    "sample_traces",
    "sampled_voltage",
    "write_events_csv",
    "write_sampled_csv",
]

DEFAULT_DELAY = 1e-6


class BiasMismatchWarning(UserWarning):
    """Quiescent drive of a device differs from its balance current."""


@dataclass(frozen=True)
class SquareWave:
    """Deterministic two-level drive replacing a junction (debug mode).

    The waveform is ``high`` for the first ``duty * period`` of each cycle,
    starting at ``phase`` seconds, and the other state otherwise.
    """

    period: float
    duty: float = 0.5
    phase: float = 0.0
    high: MagState = MagState.AP

    def __post_init__(self):
        if not (math.isfinite(self.period) and self.period > 0):
            raise InvalidConfigurationError("square-wave period must be > 0")
        if not 0 < self.duty < 1:
            raise InvalidConfigurationError("square-wave duty must be in (0, 1)")
        object.__setattr__(self, "high", MagState(self.high))

    def state_at(self, t: float) -> MagState:
        frac = ((t - self.phase) / self.period) % 1.0
        return self.high if frac < self.duty else self.high.flipped()

    def next_change(self, t: float) -> float:
        """First edge strictly after ``t``."""
        k = math.floor((t - self.phase) / self.period)
        for cand in (
            self.phase + k * self.period + self.duty * self.period,
            self.phase + (k + 1) * self.period,
            self.phase + (k + 1) * self.period + self.duty * self.period,
        ):
            if cand > t:
                return cand
        return self.phase + (k + 2) * self.period  # pragma: no cover


@dataclass(frozen=True)
class NetworkSpec:
    """Devices plus the matrix of coupling pipelines.

    ``couplings[j][k]`` is the pipeline that senses device ``k`` and drives
    device ``j`` (``None`` when absent). A device with incoming pipelines is
    biased by the sum of their quiescent currents; one without is biased at
    its own balance current.
    """

    devices: tuple
    couplings: tuple
    delay: float = DEFAULT_DELAY
    drive_overrides: Mapping[int, SquareWave] = field(default_factory=dict)
    bias_rtol: float = 1e-6

    def __post_init__(self):
        devices = tuple(self.devices)
        n = len(devices)
        if n == 0:
            raise InvalidConfigurationError("network needs at least one device")
        couplings = tuple(tuple(row) for row in self.couplings)
        if len(couplings) != n or any(len(row) != n for row in couplings):
            raise InvalidConfigurationError(f"coupling matrix must be {n}x{n}")
        for j in range(n):
            if couplings[j][j] is not None:
                raise InvalidConfigurationError(f"device {j} cannot couple to itself")
        if not (math.isfinite(self.delay) and self.delay >= 0):
            raise InvalidConfigurationError(f"delay must be >= 0, got {self.delay!r}")
        for k in self.drive_overrides:
            if not 0 <= k < n:
                raise InvalidConfigurationError(f"drive override for unknown device {k}")
        object.__setattr__(self, "devices", devices)
        object.__setattr__(self, "couplings", couplings)
        object.__setattr__(self, "drive_overrides", dict(self.drive_overrides))
        for j in range(n):
            if j in self.drive_overrides:
                continue
            bias = self.bias_current(j)
            i0 = devices[j].i_balance
            if abs(bias - i0) > self.bias_rtol * i0:
                warnings.warn(
                    f"device {j}: quiescent drive {bias:.6g} A differs from balance {i0:.6g} A",
                    BiasMismatchWarning,
                    stacklevel=3,
                )

    @property
    def n(self) -> int:
        return len(self.devices)

    def incoming(self, j: int):
        """(source index, pipeline) pairs driving device ``j``."""
        return [(k, cfg) for k, cfg in enumerate(self.couplings[j]) if cfg is not None]

    def bias_current(self, j: int) -> float:
        incoming = self.incoming(j)
        if not incoming:
            return self.devices[j].i_balance
        return math.fsum(cfg.dc_current for _, cfg in incoming)

    def with_gain(self, gain: float) -> "NetworkSpec":
        rows = [[None if c is None else c.with_gain(gain) for c in row] for row in self.couplings]
        return NetworkSpec(self.devices, rows, self.delay, self.drive_overrides, self.bias_rtol)


@dataclass(frozen=True)
class SimEvent:
    time: float
    device: int
    new_state: MagState


@dataclass(frozen=True, eq=False)
class TelegraphTrace:
    """Switching history of one device.

    ``times[0] == 0`` holds the initial state; states alternate after that.
    """

    device: int
    times: np.ndarray
    states: np.ndarray
    t_end: float
    sample_dt: float | None = None
    valid: bool = True

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        states = np.asarray(self.states, dtype=np.int8)
        if times.shape != states.shape or times.ndim != 1 or times.size == 0:
            raise InvalidArgumentError("trace needs matching non-empty times and states")
        if times[0] != 0.0:
            raise InvalidArgumentError("first event must be at t=0")
        if np.any(np.diff(times) < 0) or times[-1] > self.t_end:
            raise InvalidArgumentError("event times must be non-decreasing within [0, t_end]")
        if np.any(states[1:] == states[:-1]):
            raise InvalidArgumentError("consecutive events must alternate state")
        times.setflags(write=False)
        states.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "states", states)

    def __eq__(self, other):
        if not isinstance(other, TelegraphTrace):
            return NotImplemented
        return (
            self.device == other.device
            and self.t_end == other.t_end
            and self.valid == other.valid
            and np.array_equal(self.times, other.times)
            and np.array_equal(self.states, other.states)
        )

    __hash__ = None

    @classmethod
    def from_dwells(cls, device, first_state, dwells, **kwargs) -> "TelegraphTrace":
        """Build a trace from consecutive dwell durations starting in ``first_state``."""
        dwells = np.asarray(dwells, dtype=float)
        times = np.concatenate([[0.0], np.cumsum(dwells)[:-1]])
        states = (int(first_state) + np.arange(dwells.size)) % 2
        return cls(device, times, states, float(np.sum(dwells)), **kwargs)

    @property
    def final_state(self) -> MagState:
        return MagState(int(self.states[-1]))

    def dwell_durations(self) -> tuple[np.ndarray, np.ndarray]:
        """Durations of each dwell and the state held; the last one is censored."""
        edges = np.append(self.times, self.t_end)
        return np.diff(edges), self.states.copy()

    def events(self) -> list[SimEvent]:
        return [SimEvent(float(t), self.device, MagState(int(s))) for t, s in zip(self.times, self.states)]


# -- network builders ------------------------------------------------------


def pair_network(
    dev1: SmtjParams,
    dev2: SmtjParams,
    gain: float = 0.0,
    polarity=Polarity.POSITIVE,
    delay: float = DEFAULT_DELAY,
    **pipeline_kwargs,
) -> NetworkSpec:
    """Two devices coupled both ways with the default hardware pipeline."""
    c12 = PipelineConfig.for_target(gain, polarity, i_dc=dev1.i_balance, **pipeline_kwargs)
    c21 = PipelineConfig.for_target(gain, polarity, i_dc=dev2.i_balance, **pipeline_kwargs)
    return NetworkSpec((dev1, dev2), ((None, c12), (c21, None)), delay=delay)


def ising_network(
    devices: Sequence[SmtjParams],
    j: np.ndarray,
    gain: float,
    delay: float = DEFAULT_DELAY,
    **pipeline_kwargs,
) -> NetworkSpec:
    """Couple every edge with nonzero ``j``.

    Negative ``j`` (same-state favoring) uses positive polarity; the edge
    gain is ``gain * |j|``. Each target's quiescent current is split evenly
    across its incoming pipelines so the total sits at the balance current.
    """
    j = np.asarray(j, dtype=float)
    n = len(devices)
    rows = []
    for t in range(n):
        sources = [k for k in range(n) if k != t and j[t, k] != 0]
        row = [None] * n
        for k in sources:
            pol = Polarity.POSITIVE if j[t, k] < 0 else Polarity.NEGATIVE
            row[k] = PipelineConfig.for_target(
                gain * abs(j[t, k]),
                pol,
                i_dc=devices[t].i_balance / len(sources),
                **pipeline_kwargs,
            )
        rows.append(row)
    return NetworkSpec(tuple(devices), rows, delay=delay)


# -- kernel ----------------------------------------------------------------


def _coupling_table(spec: NetworkSpec):
    """Per target: bias and list of (source, +dI when source AP, -dI when P)."""
    table = []
    for j in range(spec.n):
        terms = []
        for k, cfg in spec.incoming(j):
            di = delta_current(cfg)
            terms.append((k, cfg.polarity.sign * di))
        table.append((spec.bias_current(j), terms))
    return table


def effective_current(spec: NetworkSpec, device: int, delayed_states: Sequence) -> float:
    """Drive current of ``device`` given the source states it currently sees."""
    if len(delayed_states) != spec.n:
        raise InvalidArgumentError(f"need {spec.n} states, got {len(delayed_states)}")
    bias, terms = _coupling_table(spec)[device]
    current = bias + sum(
        (di if int(delayed_states[k]) else -di) for k, di in terms
    )
    if current >= spec.devices[device].i_breakdown:
        raise BreakdownError(
            f"device {device}: current {current:.6g} A reaches breakdown "
            f"{spec.devices[device].i_breakdown:.6g} A",
            device=device,
            current=current,
        )
    return current


def pair_generator(spec: NetworkSpec) -> np.ndarray:
    """4x4 generator implied by a two-device network at zero delay."""
    if spec.n != 2:
        raise InvalidArgumentError("pair_generator needs exactly two devices")
    from .device import mean_dwell_time

    q = np.zeros((4, 4))
    for s in range(4):
        states = (s >> 1, s & 1)
        for d in (0, 1):
            i = effective_current(spec, d, states)
            q[s, s ^ (2 if d == 0 else 1)] = 1.0 / mean_dwell_time(spec.devices[d], states[d], i)
        q[s, s] = -q[s].sum()
    return q


class _ExpStream:
    """Buffered standard-exponential draws; consumption order is fixed."""

    def __init__(self, rng: np.random.Generator, block: int = 1 << 15):
        self._rng = rng
        self._block = block
        self._buf = rng.standard_exponential(block).tolist()
        self._i = 0

    def __call__(self) -> float:
        if self._i == self._block:
            self._buf = self._rng.standard_exponential(self._block).tolist()
            self._i = 0
        x = self._buf[self._i]
        self._i += 1
        return x


def simulate(
    spec: NetworkSpec,
    t_end: float,
    seed=None,
    initial_states: Sequence | None = None,
) -> list[TelegraphTrace]:
    """Run the exact event-driven simulation up to ``t_end``.

    Parameters
    ----------
    spec : NetworkSpec
    t_end : float
        Duration in seconds.
    seed : int, SeedSequence or Generator
        Determines initial states (when not given) and every switching time.
    initial_states : sequence of MagState, optional
        Starting configuration; drawn uniformly at random when omitted.

    Returns
    -------
    list of TelegraphTrace, one per device.

    Raises
    ------
    BreakdownError
        When any driven current reaches its device's breakdown limit. The
        traces produced so far are attached as ``partial_traces``.
    """
    if not (math.isfinite(t_end) and t_end > 0):
        raise InvalidArgumentError(f"t_end must be > 0, got {t_end!r}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    n = spec.n
    overrides = spec.drive_overrides
    if initial_states is None:
        states = [int(x) for x in rng.integers(0, 2, size=n)]
    else:
        if len(initial_states) != n:
            raise InvalidArgumentError(f"need {n} initial states")
        states = [int(MagState(s)) for s in initial_states]
    for k, wave in overrides.items():
        states[k] = int(wave.state_at(0.0))
    draw = _ExpStream(rng)

    table = _coupling_table(spec)
    targets_of = [[] for _ in range(n)]
    for j, (_, terms) in enumerate(table):
        for k, di in terms:
            targets_of[k].append((j, di))
    consts = [
        (p.tau0, p.barrier_kT, p.i_balance, p.i_crit, p.i_breakdown) for p in spec.devices
    ]
    visible = list(states)
    currents = [0.0] * n
    times = [[0.0] for _ in range(n)]
    hist = [[s] for s in states]

    def partial(t_stop):
        return [
            TelegraphTrace(d, times[d], hist[d], t_stop, valid=False) for d in range(n)
        ]

    def drive(j, t_now):
        bias, terms = table[j]
        cur = bias
        for k, di in terms:
            cur += di if visible[k] else -di
        if cur >= consts[j][4]:
            raise BreakdownError(
                f"device {j}: current {cur:.6g} A reaches breakdown {consts[j][4]:.6g} A "
                f"at t={t_now:.6g} s",
                device=j,
                current=cur,
                partial_traces=partial(t_now),
            )
        currents[j] = cur

    def rate(j):
        tau0, k_b, i0, ic, _ = consts[j]
        sign = 1.0 if states[j] else -1.0
        return 1.0 / (tau0 * math.exp(-k_b * (1.0 - sign * (currents[j] - i0) / ic)))

    clocks = [math.inf] * n
    for j in range(n):
        if j in overrides:
            clocks[j] = overrides[j].next_change(0.0)
        else:
            drive(j, 0.0)
            clocks[j] = draw() / rate(j)

    delay = spec.delay
    pending: deque = deque()
    inf = math.inf

    def apply_update(t_now, k, s):
        visible[k] = s
        for j, _ in targets_of[k]:
            if j in overrides:
                continue
            drive(j, t_now)
            clocks[j] = t_now + draw() / rate(j)

    while True:
        j = min(range(n), key=clocks.__getitem__)
        t_sw = clocks[j]
        t_up = pending[0][0] if pending else inf
        if t_up <= t_sw:
            if t_up >= t_end:
                break
            _, k, s = pending.popleft()
            apply_update(t_up, k, s)
            continue
        if t_sw >= t_end:
            break
        states[j] ^= 1
        times[j].append(t_sw)
        hist[j].append(states[j])
        if j in overrides:
            clocks[j] = overrides[j].next_change(t_sw)
        else:
            clocks[j] = t_sw + draw() / rate(j)
        if delay == 0.0:
            apply_update(t_sw, j, states[j])
        else:
            pending.append((t_sw + delay, j, states[j]))

    return [TelegraphTrace(d, times[d], hist[d], float(t_end)) for d in range(n)]


# -- sampled views ---------------------------------------------------------


def sample_times(t_end: float, dt: float, offset: float = 0.5) -> np.ndarray:
    n = int(math.floor((t_end - offset * dt) / dt)) + 1
    return (np.arange(max(n, 0)) + offset) * dt


def sample_trace(trace: TelegraphTrace, dt: float, offset: float = 0.5) -> np.ndarray:
    """Zero-order-hold samples at ``(i + offset) * dt``.

    Dwells shorter than ``dt`` can fall between sample instants and vanish;
    that loss is intentional and mirrors a finite-rate acquisition.
    """
    if not (math.isfinite(dt) and dt > 0):
        raise InvalidArgumentError(f"dt must be > 0, got {dt!r}")
    ts = sample_times(trace.t_end, dt, offset)
    idx = np.searchsorted(trace.times, ts, side="right") - 1
    return trace.states[idx]


def sample_traces(traces: Sequence[TelegraphTrace], dt: float, offset: float = 0.5):
    """Sample several traces on a common grid; returns (times, (n_samples, n_dev))."""
    t_end = min(tr.t_end for tr in traces)
    ts = sample_times(t_end, dt, offset)
    cols = [tr.states[np.searchsorted(tr.times, ts, side="right") - 1] for tr in traces]
    return ts, np.column_stack(cols) if cols else np.empty((ts.size, 0), np.int8)


def sampled_voltage(trace: TelegraphTrace, params: SmtjParams, dt: float, current=None):
    """Idealized sensed voltage ``I * R(state)`` on the sampling grid."""
    current = params.i_balance if current is None else current
    levels = np.array([resistance(params, MagState.P), resistance(params, MagState.AP)])
    return levels[sample_trace(trace, dt)] * current


# -- export ----------------------------------------------------------------


def write_events_csv(path, traces: Sequence[TelegraphTrace]) -> None:
    """Write ``device,time_s,state`` rows, device-major, in event order."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        fh.write("device,time_s,state\n")
        for tr in traces:
            for t, s in zip(tr.times.tolist(), tr.states.tolist()):
                fh.write(f"{tr.device},{t!r},{s}\n")


def write_sampled_csv(path, times: np.ndarray, samples: np.ndarray) -> None:
    path = Path(path)
    n_dev = samples.shape[1]
    header = ",".join(["time_s"] + [f"d{k}" for k in range(n_dev)])
    with path.open("w", encoding="utf-8", newline="") as fh:
        fh.write(header + "\n")
        t_str = [repr(t) for t in times.tolist()]
        rows = samples.astype(int).tolist()
        fh.writelines(t + "," + ",".join(map(str, r)) + "\n" for t, r in zip(t_str, rows))
