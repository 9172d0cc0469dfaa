"""
Single-junction model.

A superparamagnetic tunnel junction is treated as a two-level resistor whose
dwell times in the parallel (P) and antiparallel (AP) states depend
exponentially on the bias current (modified Neel-Brown form)::

    tau_AP(I) = tau0 * exp(-K * (1 - (I - I0) / Ic))
    tau_P(I)  = tau0 * exp(-K * (1 + (I - I0) / Ic))

with ``K = barrier_kT``. Dwell times are exponentially distributed, which
makes a pair of coupled junctions an exact continuous-time Markov chain.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import asdict, dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from ._validation import check_finite, check_finite_array, check_positive
from .errors import BreakdownError, InvalidArgumentError, InvalidConfigurationError

__all__ = [
    "MagState",
    "SmtjParams",
    "mean_dwell_time",
    "state_probability",
    "resistance",
    "sample_dwell",
    "load_presets",
    "preset",
]


class MagState(enum.IntEnum):
    """Magnetic configuration; P encodes logical 0 and AP logical 1."""

    P = 0
    AP = 1

    @property
    def spin(self) -> int:
        return 1 if self is MagState.AP else -1

    def flipped(self) -> "MagState":
        return MagState(1 - self)


@dataclass(frozen=True)
class SmtjParams:
    """Physical parameters of one junction, all in SI units.

    Parameters
    ----------
    tau0 : float
        Characteristic attempt time in seconds.
    barrier_kT : float
        Energy barrier in units of kT.
    i_crit : float
        Critical current in amperes.
    i_balance : float
        Current at which both states are equally likely (I0).
    r_p, r_ap : float
        Resistances of the parallel and antiparallel states in ohms.
    i_breakdown : float
        Current at which the tunnel barrier is destroyed.
    """

    tau0: float
    barrier_kT: float
    i_crit: float
    i_balance: float
    r_p: float
    r_ap: float
    i_breakdown: float

    def __post_init__(self):
        for name in ("tau0", "barrier_kT", "i_crit"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise InvalidConfigurationError(f"{name} must be finite and > 0, got {value!r}")
        if not (math.isfinite(self.r_p) and self.r_p > 0 and math.isfinite(self.r_ap)):
            raise InvalidConfigurationError("resistances must be finite and positive")
        if not self.r_ap > self.r_p:
            raise InvalidConfigurationError(
                f"r_ap must exceed r_p (got r_p={self.r_p!r}, r_ap={self.r_ap!r})"
            )
        if not (math.isfinite(self.i_balance) and math.isfinite(self.i_breakdown)):
            raise InvalidConfigurationError("currents must be finite")
        if not self.i_breakdown > self.i_balance:
            raise InvalidConfigurationError(
                f"i_breakdown ({self.i_breakdown!r}) must exceed i_balance ({self.i_balance!r})"
            )

    @classmethod
    def from_balance(
        cls,
        tau_balance: float,
        slope_b: float,
        i_balance: float,
        r_p: float,
        r_ap: float,
        i_breakdown: float,
        barrier_kT: float = 10.0,
    ) -> "SmtjParams":
        """Build parameters from the dwell time at balance and the log-slope.

        Measured dwell-time curves only pin down ``tau(I0)`` and
        ``B = barrier_kT / i_crit``; the barrier height is a free choice
        that does not affect any dwell time.
        """
        tau_balance = check_positive(tau_balance, "tau_balance")
        slope_b = check_positive(slope_b, "slope_b")
        barrier_kT = check_positive(barrier_kT, "barrier_kT")
        return cls(
            tau0=tau_balance * math.exp(barrier_kT),
            barrier_kT=barrier_kT,
            i_crit=barrier_kT / slope_b,
            i_balance=i_balance,
            r_p=r_p,
            r_ap=r_ap,
            i_breakdown=i_breakdown,
        )

    @property
    def slope_b(self) -> float:
        """Exponential sensitivity B in 1/A, so that g = exp(B * dI)."""
        return self.barrier_kT / self.i_crit

    @property
    def tau_balance(self) -> float:
        """Mean dwell time (either state) at the balance current."""
        return self.tau0 * math.exp(-self.barrier_kT)

    @property
    def tmr(self) -> float:
        return (self.r_ap - self.r_p) / self.r_p

    def to_dict(self) -> dict:
        return asdict(self)


def _as_state(state) -> MagState:
    try:
        return MagState(state)
    except ValueError as exc:
        raise InvalidArgumentError(f"unknown magnetic state {state!r}") from exc


def mean_dwell_time(params: SmtjParams, state, i):
    """Mean dwell time in ``state`` at bias current ``i`` (scalar or array).

    >>> p = SmtjParams.from_balance(1e-4, 4.5e5, 0.95e-3, 450.0, 990.0, 1.05e-3)
    >>> round(mean_dwell_time(p, MagState.AP, p.i_balance) * 1e6, 9)
    100.0
    """
    state = _as_state(state)
    sign = 1.0 if state is MagState.AP else -1.0
    if np.ndim(i) == 0:
        x = check_finite(i, "i")
        return params.tau0 * math.exp(
            -params.barrier_kT * (1.0 - sign * (x - params.i_balance) / params.i_crit)
        )
    x = check_finite_array(i, "i")
    return params.tau0 * np.exp(
        -params.barrier_kT * (1.0 - sign * (x - params.i_balance) / params.i_crit)
    )


def state_probability(params: SmtjParams, state, i):
    """Fraction of time spent in ``state`` at current ``i``."""
    state = _as_state(state)
    sign = 1.0 if state is MagState.AP else -1.0
    scalar = np.ndim(i) == 0
    x = check_finite(i, "i") if scalar else check_finite_array(i, "i")
    z = -sign * 2.0 * params.barrier_kT * (x - params.i_balance) / params.i_crit
    if scalar:
        # 1/(1+e^z) without overflow for large |z|
        if z > 0:
            e = math.exp(-z)
            return e / (1.0 + e)
        return 1.0 / (1.0 + math.exp(z))
    return 0.5 * (1.0 - np.tanh(0.5 * z))


def resistance(params: SmtjParams, state) -> float:
    return params.r_ap if _as_state(state) is MagState.AP else params.r_p


def sample_dwell(params: SmtjParams, state, i, rng: np.random.Generator, size=None):
    """Draw exponential dwell time(s) with the mean given by :func:`mean_dwell_time`.

    Raises
    ------
    BreakdownError
        If ``i`` is at or above the device's breakdown current.
    """
    i = check_finite(i, "i")
    if i >= params.i_breakdown:
        raise BreakdownError(
            f"current {i:.6g} A reaches breakdown limit {params.i_breakdown:.6g} A",
            current=i,
        )
    return rng.exponential(mean_dwell_time(params, state, i), size=size)


# -- presets -----------------------------------------------------------------

_PRESET_FIELDS = {
    "tau_balance_s",
    "slope_b_per_a",
    "i_balance_a",
    "r_p_ohm",
    "r_ap_ohm",
    "i_breakdown_a",
    "barrier_kt",
}


def params_from_mapping(entry: dict) -> SmtjParams:
    """Build :class:`SmtjParams` from a unit-suffixed mapping.

    Accepts either the reduced form (``tau_balance_s``, ``slope_b_per_a``) or
    the microscopic form (``tau0_s``, ``barrier_kt``, ``i_crit_a``).
    """
    common = dict(
        i_balance=float(entry["i_balance_a"]),
        r_p=float(entry["r_p_ohm"]),
        r_ap=float(entry["r_ap_ohm"]),
        i_breakdown=float(entry["i_breakdown_a"]),
    )
    if "tau0_s" in entry:
        return SmtjParams(
            tau0=float(entry["tau0_s"]),
            barrier_kT=float(entry["barrier_kt"]),
            i_crit=float(entry["i_crit_a"]),
            **common,
        )
    return SmtjParams.from_balance(
        tau_balance=float(entry["tau_balance_s"]),
        slope_b=float(entry["slope_b_per_a"]),
        barrier_kT=float(entry.get("barrier_kt", 10.0)),
        **common,
    )


def load_presets(path: str | Path | None = None) -> dict[str, SmtjParams]:
    """Load named device presets from a JSON file (bundled file by default)."""
    if path is None:
        text = resources.files("smtjcouple").joinpath("data/presets.json").read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    raw = json.loads(text)
    return {
        name: params_from_mapping(entry)
        for name, entry in raw.items()
        if not name.startswith("_")
    }


def preset(name: str) -> SmtjParams:
    presets = load_presets()
    try:
        return presets[name]
    except KeyError:
        raise InvalidArgumentError(
            f"unknown preset {name!r}; available: {', '.join(sorted(presets))}"
        ) from None
