"""
Ising view of a coupled network and a gain-schedule annealing harness.

Spins map P -> -1 and AP -> +1. A coupling ``J < 0`` favors equal spins and
is realized with positive-polarity pipelines; ``J > 0`` uses negative
polarity. Energies are in model units with kT = 1: the circuit gain plays
the role of inverse temperature and :func:`calibrate_gain_to_temperature`
supplies the scale that ties model units to a physical device.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .analog import MAX_GAIN, PipelineConfig, delta_current
from .device import MagState, SmtjParams
from .errors import BreakdownError, InvalidArgumentError, InvalidConfigurationError
from .markov import relaxation_rate
from .simnet import NetworkSpec, ising_network, pair_generator, simulate
from .stats import event_occupancy, joint_code_series

__all__ = [
    "POLARITY_CONVENTION",
    "IsingProblem",
    "AnnealSchedule",
    "BoltzmannPrediction",
    "GainCalibration",
    "StepResult",
    "AnnealReport",
    "all_configs",
    "model_energy",
    "boltzmann_distribution",
    "calibrate_gain_to_temperature",
    "relaxation_schedule",
    "anneal",
]

POLARITY_CONVENTION = {
    "J<0": "positive polarity (same-state favoring, ferromagnetic)",
    "J>0": "negative polarity (opposite-state favoring, antiferromagnetic)",
    "spin": "P=-1, AP=+1",
}


@dataclass(frozen=True, eq=False)
class IsingProblem:
    j: np.ndarray

    def __post_init__(self):
        j = np.array(self.j, dtype=float)
        if j.ndim != 2 or j.shape[0] != j.shape[1]:
            raise InvalidConfigurationError("J must be a square matrix")
        if not np.allclose(j, j.T, rtol=0, atol=0):
            raise InvalidConfigurationError("J must be symmetric")
        if np.any(np.diag(j) != 0):
            raise InvalidConfigurationError("J must have a zero diagonal")
        j.setflags(write=False)
        object.__setattr__(self, "j", j)

    @property
    def n(self) -> int:
        return self.j.shape[0]

    @classmethod
    def pair(cls, j12: float = -1.0) -> "IsingProblem":
        return cls(np.array([[0.0, j12], [j12, 0.0]]))


def all_configs(n: int) -> np.ndarray:
    """Every 0/1 configuration, device 0 most significant."""
    return np.array(list(itertools.product((0, 1), repeat=n)), dtype=np.int8)


def _spins(config) -> np.ndarray:
    return 2.0 * np.asarray(config, dtype=float) - 1.0


def model_energy(problem: IsingProblem, config) -> float:
    """Sum over pairs a < b of ``J[a, b] * s_a * s_b``."""
    s = _spins([int(MagState(c)) for c in config])
    if s.size != problem.n:
        raise InvalidArgumentError(f"config needs {problem.n} spins")
    return float(0.5 * s @ problem.j @ s)


def _all_energies(problem: IsingProblem) -> np.ndarray:
    s = 2.0 * all_configs(problem.n) - 1.0
    return 0.5 * np.einsum("ia,ab,ib->i", s, problem.j, s)


@dataclass(frozen=True, eq=False)
class BoltzmannPrediction:
    probabilities: np.ndarray
    t_eff: float
    energies: np.ndarray


def boltzmann_distribution(problem: IsingProblem, gain: float, temperature: float = 1.0,
                           energies=None) -> BoltzmannPrediction:
    """Stationary distribution ``exp(-gain * E / T) / Z`` over all configurations."""
    if not (gain >= 0 and math.isfinite(gain)):
        raise InvalidArgumentError(f"gain must be >= 0, got {gain!r}")
    if not (temperature > 0 and math.isfinite(temperature)):
        raise InvalidArgumentError(f"temperature must be > 0, got {temperature!r}")
    e = _all_energies(problem) if energies is None else np.asarray(energies, dtype=float)
    x = -gain * (e - e.min()) / temperature
    w = np.exp(x)
    t_eff = math.inf if gain == 0 else temperature / gain
    return BoltzmannPrediction(w / w.sum(), t_eff, e)


@dataclass(frozen=True)
class GainCalibration:
    """Maps circuit gain to coupling strength for one device.

    ``delta_i_per_gain`` is dI/dG of the pipeline, ``slope_b`` the device's
    exponential sensitivity. With a unit coupling ``|J| = 1`` the room
    temperature in model units is ``1 / (slope_b * delta_i_per_gain)``.
    """

    delta_i_per_gain: float
    slope_b: float

    @property
    def temperature(self) -> float:
        return 1.0 / (self.slope_b * self.delta_i_per_gain)

    def delta_current(self, gain):
        return self.delta_i_per_gain * np.asarray(gain, dtype=float)

    def g(self, gain):
        return np.exp(self.slope_b * self.delta_current(gain))

    def t_eff(self, gain) -> float:
        gain = float(gain)
        return math.inf if gain == 0 else self.temperature / gain


def calibrate_gain_to_temperature(pipeline: PipelineConfig, device: SmtjParams) -> GainCalibration:
    # dI is linear in G; probe at the top of the hardware range
    di = delta_current(pipeline.with_gain(MAX_GAIN)) / MAX_GAIN
    return GainCalibration(delta_i_per_gain=di, slope_b=device.slope_b)


@dataclass(frozen=True)
class AnnealSchedule:
    """Ordered ``(duration_s, gain)`` steps with non-decreasing gain."""

    steps: tuple

    def __post_init__(self):
        steps = tuple((float(d), float(g)) for d, g in self.steps)
        if not steps:
            raise InvalidConfigurationError("schedule needs at least one step")
        prev = -math.inf
        for i, (d, g) in enumerate(steps):
            if not (d > 0 and math.isfinite(d)):
                raise InvalidConfigurationError(f"step {i}: duration must be > 0")
            if not 0 <= g <= MAX_GAIN:
                raise InvalidConfigurationError(f"step {i}: gain {g} outside [0, {MAX_GAIN}]")
            if g < prev:
                raise InvalidConfigurationError(f"step {i}: gains must be non-decreasing")
            prev = g
        object.__setattr__(self, "steps", steps)

    @property
    def gains(self):
        return [g for _, g in self.steps]

    @property
    def total_duration(self) -> float:
        return math.fsum(d for d, _ in self.steps)


def relaxation_schedule(dev1: SmtjParams, dev2: SmtjParams, gains: Sequence[float],
                        multiple: float = 100.0, j12: float = -1.0, delay: float = 0.0) -> AnnealSchedule:
    """Pair schedule whose step lengths are ``multiple`` relaxation times at each gain."""
    problem = IsingProblem.pair(j12)
    steps = []
    for g in gains:
        spec = ising_network([dev1, dev2], problem.j, g, delay=delay)
        lam = relaxation_rate(pair_generator(spec))
        steps.append((multiple / abs(lam), g))
    return AnnealSchedule(tuple(steps))


@dataclass(frozen=True, eq=False)
class StepResult:
    gain: float
    duration: float
    t_start: float
    t_eff: float
    distribution: np.ndarray
    std_err: np.ndarray
    boltzmann: np.ndarray
    mean_energy: float

    @property
    def total_variation(self) -> float:
        return 0.5 * float(np.abs(self.distribution - self.boltzmann).sum())


@dataclass(frozen=True, eq=False)
class AnnealReport:
    problem: IsingProblem
    steps: list
    energy_times: np.ndarray
    energies: np.ndarray
    final_states: tuple
    calibration: GainCalibration
    convention: dict = field(default_factory=lambda: dict(POLARITY_CONVENTION))

    @property
    def final_distribution(self) -> np.ndarray:
        return self.steps[-1].distribution

    @property
    def dominant_configs(self) -> list[str]:
        """Configurations holding at least half the largest final occupancy."""
        p = self.final_distribution
        cfgs = all_configs(self.problem.n)
        return ["".join(map(str, cfgs[i])) for i in np.flatnonzero(p >= 0.5 * p.max())]

    def to_dict(self) -> dict:
        return {
            "convention": self.convention,
            "j": self.problem.j.tolist(),
            "calibration": {
                "delta_i_per_gain_a": self.calibration.delta_i_per_gain,
                "slope_b_per_a": self.calibration.slope_b,
                "temperature_model_units": self.calibration.temperature,
            },
            "steps": [
                {
                    "gain": s.gain,
                    "duration_s": s.duration,
                    "t_start_s": s.t_start,
                    "t_eff": None if math.isinf(s.t_eff) else s.t_eff,
                    "g": float(self.calibration.g(s.gain)),
                    "distribution": s.distribution.tolist(),
                    "std_err": s.std_err.tolist(),
                    "boltzmann": s.boltzmann.tolist(),
                    "total_variation": s.total_variation,
                    "mean_energy": s.mean_energy,
                }
                for s in self.steps
            ],
            "final_states": list(self.final_states),
            "dominant_configs": self.dominant_configs,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def write_energy_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write("time_s,energy\n")
            fh.writelines(f"{t!r},{e!r}\n" for t, e in zip(self.energy_times.tolist(), self.energies.tolist()))


def anneal(problem: IsingProblem, template: NetworkSpec, schedule: AnnealSchedule, seed=None,
           n_batches: int = 50) -> AnnealReport:
    """Run the network through a gain schedule.

    Each step rebuilds the couplings from ``problem`` at the step gain and
    continues from the previous step's final states. Step ``i`` draws from
    the ``i``-th child of ``SeedSequence(seed)``.

    Raises
    ------
    BreakdownError
        Naming the first step whose gain would push a device past breakdown.
    """
    devices = list(template.devices)
    if len(devices) != problem.n:
        raise InvalidConfigurationError("template device count differs from problem size")
    calib = calibrate_gain_to_temperature(PipelineConfig(), devices[0])
    energies_all = _all_energies(problem)
    children = np.random.SeedSequence(seed).spawn(len(schedule.steps))

    specs = []
    for i, (_, gain) in enumerate(schedule.steps):
        try:
            spec = ising_network(devices, problem.j, gain, delay=template.delay)
        except InvalidConfigurationError as exc:
            raise InvalidConfigurationError(f"step {i} (gain {gain}): {exc}") from exc
        for d in range(spec.n):
            bias = spec.bias_current(d)
            worst = bias + sum(delta_current(c) for _, c in spec.incoming(d))
            if worst >= devices[d].i_breakdown:
                raise BreakdownError(
                    f"step {i} (gain {gain}): device {d} would reach {worst:.6g} A, "
                    f"breakdown at {devices[d].i_breakdown:.6g} A",
                    device=d,
                    current=worst,
                )
        specs.append(spec)

    steps, e_times, e_vals = [], [], []
    states = None
    t0 = 0.0
    for i, ((duration, gain), spec) in enumerate(zip(schedule.steps, specs)):
        traces = simulate(spec, duration, seed=children[i], initial_states=states)
        occ = event_occupancy(traces, n_batches=n_batches)
        starts, codes, _ = joint_code_series(traces)
        e_times.append(starts + t0)
        e_vals.append(energies_all[codes])
        steps.append(
            StepResult(
                gain=gain,
                duration=duration,
                t_start=t0,
                t_eff=calib.t_eff(gain),
                distribution=occ.p,
                std_err=occ.std_err,
                boltzmann=boltzmann_distribution(
                    problem, gain, calib.temperature, energies=energies_all
                ).probabilities,
                mean_energy=float(occ.p @ energies_all),
            )
        )
        states = [tr.final_state for tr in traces]
        t0 += duration

    return AnnealReport(
        problem=problem,
        steps=steps,
        energy_times=np.concatenate(e_times),
        energies=np.concatenate(e_vals),
        final_states=tuple(int(s) for s in states),
        calibration=calib,
    )
