"""
Ideal transfer functions of the interaction-circuit stages.

One unidirectional pipeline senses a source junction and drives a target::

    threshold -> gain (inverting) -> level shift -> transconductance (inverting)

The output is a two-level current ``I_dc +/- dI`` with ``dI`` proportional to
the gain. Stages are memoryless and rail-free; the aggregate propagation
delay is handled by the network simulator.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .device import MagState, SmtjParams
from .errors import BreakdownError, InvalidConfigurationError

__all__ = [
    "Polarity",
    "ThresholdConfig",
    "GainConfig",
    "LevelShiftConfig",
    "TransconductanceConfig",
    "PipelineConfig",
    "threshold_stage",
    "gain_stage",
    "level_shift_stage",
    "transconductance_stage",
    "pipeline_output",
    "pipeline_output_from_voltage",
    "delta_current",
    "MAX_GAIN",
]

# gain-stage potentiometer range of the reference hardware
MAX_GAIN = 0.1
MAX_REFERENCE_V = 1.0


class Polarity(str, enum.Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"

    @property
    def sign(self) -> int:
        return 1 if self is Polarity.POSITIVE else -1


def _positive(name, value):
    if not (math.isfinite(value) and value > 0):
        raise InvalidConfigurationError(f"{name} must be finite and > 0, got {value!r}")


@dataclass(frozen=True)
class ThresholdConfig:
    i_fixed: float = 1e-3
    r_var: float = 615.0
    v_high: float = 2.5
    polarity: Polarity = Polarity.POSITIVE

    def __post_init__(self):
        object.__setattr__(self, "polarity", Polarity(self.polarity))
        _positive("i_fixed", self.i_fixed)
        _positive("v_high", self.v_high)
        if not (math.isfinite(self.r_var) and self.r_var >= 0):
            raise InvalidConfigurationError(f"r_var must be >= 0, got {self.r_var!r}")
        if not 0.0 <= self.reference <= MAX_REFERENCE_V:
            raise InvalidConfigurationError(
                f"threshold reference {self.reference:.4g} V outside [0, {MAX_REFERENCE_V}] V"
            )

    @property
    def reference(self) -> float:
        return self.i_fixed * self.r_var

    def digital_level(self, source_state) -> float:
        """Output for an ideal (noise-free, well-separated) sensed state."""
        high = MagState(source_state) is MagState.AP
        if self.polarity is Polarity.NEGATIVE:
            high = not high
        return self.v_high if high else 0.0


@dataclass(frozen=True)
class GainConfig:
    r_gain: float = 0.0
    r_gs: float = 100e3
    v_c: float = 1.25

    def __post_init__(self):
        if not (math.isfinite(self.r_gs) and self.r_gs > 0):
            raise InvalidConfigurationError(f"r_gs must be > 0, got {self.r_gs!r}")
        if not (math.isfinite(self.r_gain) and self.r_gain >= 0):
            raise InvalidConfigurationError(f"r_gain must be >= 0, got {self.r_gain!r}")
        if self.gain > MAX_GAIN * (1 + 1e-12):
            raise InvalidConfigurationError(
                f"gain {self.gain:.6g} exceeds hardware range [0, {MAX_GAIN}]"
            )

    @property
    def gain(self) -> float:
        return self.r_gain / self.r_gs

    @classmethod
    def from_gain(cls, gain: float, r_gs: float = 100e3, v_c: float = 1.25) -> "GainConfig":
        return cls(r_gain=gain * r_gs, r_gs=r_gs, v_c=v_c)


@dataclass(frozen=True)
class LevelShiftConfig:
    r_1: float = 10e3
    r_f: float = 10e3
    r_2: float = 10e3
    r_g: float = 10e3
    v_bias: float = 4.25

    def __post_init__(self):
        for name in ("r_1", "r_f", "r_2", "r_g"):
            _positive(name, getattr(self, name))
        if not math.isfinite(self.v_bias):
            raise InvalidConfigurationError("v_bias must be finite")

    @property
    def input_gain(self) -> float:
        return (self.r_1 + self.r_f) * self.r_g / ((self.r_2 + self.r_g) * self.r_1)

    @property
    def bias_gain(self) -> float:
        return (self.r_1 + self.r_f) * self.r_2 / ((self.r_2 + self.r_g) * self.r_1)


@dataclass(frozen=True)
class TransconductanceConfig:
    v_dd: float = 15.0
    r_1: float = 10e3

    def __post_init__(self):
        _positive("r_1", self.r_1)
        if not math.isfinite(self.v_dd):
            raise InvalidConfigurationError("v_dd must be finite")


@dataclass(frozen=True)
class PipelineConfig:
    """Complete unidirectional coupling circuit."""

    threshold: ThresholdConfig = field(default_factory=ThresholdConfig)
    gain: GainConfig = field(default_factory=GainConfig)
    shift: LevelShiftConfig = field(default_factory=LevelShiftConfig)
    transcond: TransconductanceConfig = field(default_factory=TransconductanceConfig)

    @classmethod
    def for_target(
        cls,
        gain: float,
        polarity=Polarity.POSITIVE,
        i_dc: float = 0.95e-3,
        reference_v: float = 0.615,
        v_high: float = 2.5,
        v_c: float = 1.25,
        v_dd: float = 15.0,
        r_1: float = 10e3,
    ) -> "PipelineConfig":
        """Default hardware with ``v_bias`` chosen so the quiescent current is ``i_dc``."""
        shift = LevelShiftConfig()
        v_bias = (v_dd - i_dc * r_1 - shift.input_gain * v_c) / shift.bias_gain
        return cls(
            threshold=ThresholdConfig(
                i_fixed=1e-3, r_var=reference_v / 1e-3, v_high=v_high, polarity=polarity
            ),
            gain=GainConfig.from_gain(gain, v_c=v_c),
            shift=replace(shift, v_bias=v_bias),
            transcond=TransconductanceConfig(v_dd=v_dd, r_1=r_1),
        )

    def with_gain(self, gain: float) -> "PipelineConfig":
        return replace(self, gain=GainConfig.from_gain(gain, r_gs=self.gain.r_gs, v_c=self.gain.v_c))

    def with_polarity(self, polarity) -> "PipelineConfig":
        return replace(self, threshold=replace(self.threshold, polarity=Polarity(polarity)))

    @property
    def polarity(self) -> Polarity:
        return self.threshold.polarity

    @property
    def dc_current(self) -> float:
        """Quiescent current: the midpoint of the two output levels."""
        return 0.5 * (
            pipeline_output(self, MagState.P) + pipeline_output(self, MagState.AP)
        )

    def check_target(self, target: SmtjParams) -> None:
        """Reject a configuration whose upper current level breaks the target down."""
        top = max(pipeline_output(self, MagState.P), pipeline_output(self, MagState.AP))
        if top >= target.i_breakdown:
            raise BreakdownError(
                f"pipeline drives {top:.6g} A, at or above breakdown {target.i_breakdown:.6g} A",
                current=top,
            )


def threshold_stage(cfg: ThresholdConfig, v_in, noise_sigma: float = 0.0, rng=None):
    """Digitize a sensed voltage; values equal to the reference go low.

    ``noise_sigma`` adds Gaussian noise to ``v_in`` before comparison (needs ``rng``).
    """
    v = np.asarray(v_in, dtype=float)
    if noise_sigma > 0:
        if rng is None:
            raise ValueError("noise injection requires an rng")
        v = v + rng.normal(0.0, noise_sigma, size=v.shape)
    above = v > cfg.reference
    if cfg.polarity is Polarity.NEGATIVE:
        above = ~above
    out = np.where(above, cfg.v_high, 0.0)
    return float(out) if out.ndim == 0 else out


def gain_stage(cfg: GainConfig, v_in):
    if not cfg.r_gs:
        raise InvalidConfigurationError("r_gs must be non-zero")
    return cfg.gain * (cfg.v_c - v_in) + cfg.v_c


def level_shift_stage(cfg: LevelShiftConfig, v_in):
    den = (cfg.r_2 + cfg.r_g) * cfg.r_1
    if den == 0:
        raise InvalidConfigurationError("level-shift resistor network has a zero denominator")
    num = cfg.r_1 + cfg.r_f
    return (num * cfg.r_g / den) * v_in + (num * cfg.r_2 / den) * cfg.v_bias


def transconductance_stage(cfg: TransconductanceConfig, v_in):
    if not cfg.r_1:
        raise InvalidConfigurationError("r_1 must be non-zero")
    return (cfg.v_dd - v_in) / cfg.r_1


def _back_end(cfg: PipelineConfig, v_digital):
    v = gain_stage(cfg.gain, v_digital)
    v = level_shift_stage(cfg.shift, v)
    return transconductance_stage(cfg.transcond, v)


def pipeline_output(cfg: PipelineConfig, source_state, target: SmtjParams | None = None) -> float:
    """Current delivered to the target for an ideally sensed source state."""
    current = _back_end(cfg, cfg.threshold.digital_level(source_state))
    if target is not None and current >= target.i_breakdown:
        raise BreakdownError(
            f"pipeline output {current:.6g} A reaches breakdown {target.i_breakdown:.6g} A",
            current=current,
        )
    return current


def pipeline_output_from_voltage(cfg: PipelineConfig, v_sense, noise_sigma=0.0, rng=None):
    """Same chain, but starting from the raw sensed voltage."""
    return _back_end(cfg, threshold_stage(cfg.threshold, v_sense, noise_sigma, rng))


def delta_current(cfg: PipelineConfig) -> float:
    """Half the separation of the two output current levels."""
    return abs(pipeline_output(cfg, MagState.AP) - pipeline_output(cfg, MagState.P)) / 2.0
