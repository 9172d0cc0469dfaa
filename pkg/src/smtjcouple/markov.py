"""
Four-state continuous-time Markov model of a coupled junction pair.

Joint states are indexed ``2 * s1 + s2`` with P=0 and AP=1, i.e.
``00=(P,P), 01=(P,AP), 10=(AP,P), 11=(AP,AP)``. Generators are stored
row-source / column-destination with zero row sums; the stationary
distribution is the *left* null vector, so the convention is immaterial for
anything computed here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .analog import Polarity
from .errors import (
    InvalidConfigurationError,
    NumericalFailureError,
    UndefinedCorrelationError,
    UnsupportedConfigurationError,
)

__all__ = [
    "JOINT_LABELS",
    "CoupledPairModel",
    "Generator4",
    "pair_rates",
    "build_generator",
    "steady_state",
    "slowest_eigenvalue",
    "spectrum",
    "relaxation_rate",
    "joint_dwell_times",
    "predict_correlation",
]

JOINT_LABELS = ("00", "01", "10", "11")


@dataclass(frozen=True)
class CoupledPairModel:
    """Reduced description of a coupled pair.

    ``tau01`` is the balanced dwell time of the slower device, ``r`` the
    ratio of slower to faster timescale, ``g1``/``g2`` the per-device dwell
    time multipliers ``exp(B * dI)``.
    """

    tau01: float
    r: float = 1.0
    g1: float = 1.0
    g2: float = 1.0
    polarity: Polarity = Polarity.POSITIVE

    def __post_init__(self):
        object.__setattr__(self, "polarity", Polarity(self.polarity))
        if not (math.isfinite(self.tau01) and self.tau01 > 0):
            raise InvalidConfigurationError(f"tau01 must be > 0, got {self.tau01!r}")
        if not (math.isfinite(self.r) and self.r >= 1):
            raise InvalidConfigurationError(
                f"r must be >= 1 (device 1 is the slower one), got {self.r!r}"
            )
        for name in ("g1", "g2"):
            g = getattr(self, name)
            if not (math.isfinite(g) and g >= 1):
                raise InvalidConfigurationError(f"{name} must be >= 1, got {g!r}")

    @classmethod
    def symmetric(cls, tau01, g, r=1.0, polarity=Polarity.POSITIVE):
        return cls(tau01=tau01, r=r, g1=g, g2=g, polarity=polarity)

    @property
    def equal_g(self) -> bool:
        return self.g1 == self.g2


@dataclass(frozen=True)
class Generator4:
    """Validated 4x4 transition-rate matrix."""

    q: np.ndarray

    def __post_init__(self):
        q = np.array(self.q, dtype=float)
        if q.shape != (4, 4):
            raise InvalidConfigurationError(f"generator must be 4x4, got {q.shape}")
        if not np.all(np.isfinite(q)):
            raise InvalidConfigurationError("generator has non-finite entries")
        off = q - np.diag(np.diag(q))
        if np.any(off < 0):
            raise InvalidConfigurationError("off-diagonal rates must be non-negative")
        scale = max(float(np.max(np.abs(q))), 1.0)
        if np.any(np.abs(q.sum(axis=1)) > 1e-12 * scale):
            raise InvalidConfigurationError("generator rows must sum to zero")
        if q[0, 3] or q[3, 0] or q[1, 2] or q[2, 1]:
            raise InvalidConfigurationError("simultaneous double flips must have zero rate")
        q.setflags(write=False)
        object.__setattr__(self, "q", q)

    def __eq__(self, other):
        return isinstance(other, Generator4) and np.array_equal(self.q, other.q)

    __hash__ = None


def pair_rates(tau1, tau2, g1, g2, polarity=Polarity.POSITIVE) -> np.ndarray:
    """Generator for two devices with balanced dwell times ``tau1``/``tau2``.

    Unlike :class:`CoupledPairModel` this makes no assumption about which
    device is slower. Device ``d`` sees ``I0 + sigma*dI`` where ``sigma`` is
    +1 when its partner is AP (positive polarity); a higher current lengthens
    the AP dwell by ``g`` and shortens the P dwell by ``g``.
    """
    sgn = Polarity(polarity).sign
    taus = (tau1, tau2)
    gs = (g1, g2)
    q = np.zeros((4, 4))
    for s in range(4):
        bits = (s >> 1, s & 1)
        for d in (0, 1):
            partner = bits[1 - d]
            sigma = sgn * (1 if partner else -1)
            # AP dwell scales as g**sigma, P dwell as g**-sigma
            exponent = sigma if bits[d] else -sigma
            dwell = taus[d] * gs[d] ** exponent
            dest = s ^ (2 if d == 0 else 1)
            q[s, dest] = 1.0 / dwell
        q[s, s] = -(q[s].sum())
    return q


def build_generator(model: CoupledPairModel) -> Generator4:
    return Generator4(
        pair_rates(model.tau01, model.tau01 / model.r, model.g1, model.g2, model.polarity)
    )


def steady_state(gen: Generator4) -> np.ndarray:
    """Stationary distribution: left null vector normalized to sum 1."""
    q = gen.q if isinstance(gen, Generator4) else Generator4(gen).q
    a = q.T.copy()
    a[-1, :] = 1.0
    b = np.zeros(4)
    b[-1] = 1.0
    if not np.isfinite(np.linalg.cond(a)) or np.linalg.cond(a) > 1e12:
        raise NumericalFailureError("generator is reducible or degenerate")
    try:
        p = np.linalg.solve(a, b)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailureError("generator is reducible or degenerate") from exc
    if np.any(p <= 0):
        raise NumericalFailureError("stationary distribution is not strictly positive")
    return p / p.sum()


def slowest_eigenvalue(model: CoupledPairModel) -> float:
    """Closed-form slowest nonzero eigenvalue for the equal-g pair.

    Raises
    ------
    UnsupportedConfigurationError
        When ``g1 != g2``; use :func:`relaxation_rate` instead.
    """
    if not model.equal_g:
        raise UnsupportedConfigurationError(
            "closed-form slowest eigenvalue requires g1 == g2; use relaxation_rate()"
        )
    g, r = model.g1, model.r
    b = (g * g + 1.0) * (r + 1.0)
    disc = b * b - 16.0 * g * g * r
    # disc >= 0 by AM-GM; clip rounding noise at g = r = 1
    return (-b + math.sqrt(max(disc, 0.0))) / (2.0 * g) / model.tau01


def spectrum(gen) -> np.ndarray:
    """Eigenvalues sorted by decreasing real part (the first is ~0)."""
    q = gen.q if isinstance(gen, Generator4) else np.asarray(gen, dtype=float)
    ev = np.linalg.eigvals(q)
    return ev[np.argsort(-ev.real, kind="stable")]


def relaxation_rate(gen) -> float:
    """Real part of the slowest-decaying nonzero eigenvalue (numerical).

    Works for unequal g; if that mode is a complex pair only the real part
    (which sets the decay envelope) is returned.
    """
    return float(spectrum(gen)[1].real)


def joint_dwell_times(gen: Generator4) -> np.ndarray:
    q = gen.q if isinstance(gen, Generator4) else np.asarray(gen, dtype=float)
    diag = np.diag(q)
    if np.any(diag == 0):
        raise InvalidConfigurationError("generator has an absorbing state (zero diagonal)")
    return -1.0 / diag


def correlation_from_distribution(p) -> float:
    """Pearson correlation of the two marginals of a joint 4-vector."""
    p = np.asarray(p, dtype=float)
    s1 = np.array([-1.0, -1.0, 1.0, 1.0])
    s2 = np.array([-1.0, 1.0, -1.0, 1.0])
    m1, m2 = p @ s1, p @ s2
    v1, v2 = 1.0 - m1 * m1, 1.0 - m2 * m2
    if v1 <= 0 or v2 <= 0:
        raise UndefinedCorrelationError("a marginal has zero variance")
    return float((p @ (s1 * s2) - m1 * m2) / math.sqrt(v1 * v2))


def predict_correlation(gen: Generator4) -> float:
    """Stationary correlation of the two devices' binary states."""
    return correlation_from_distribution(steady_state(gen))
