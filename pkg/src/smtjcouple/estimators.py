"""
scikit-learn compatible wrappers around the trace-analysis routines.

``TelegraphDigitizer`` turns sensed voltages into 0/1 states and
``PairMarkovEstimator`` fits a four-state generator to a sampled pair of
digitized traces, so both slot into ``sklearn.pipeline.Pipeline``.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted, validate_data

from .errors import InvalidArgumentError
from .markov import Generator4, joint_dwell_times, predict_correlation, steady_state
from .stats import pearson

__all__ = ["TelegraphDigitizer", "PairMarkovEstimator"]


def _two_level_midpoint(x, n_iter=50):
    """Midpoint between the two clusters of a 1-D two-means fit."""
    lo, hi = float(np.min(x)), float(np.max(x))
    if lo == hi:
        return lo
    for _ in range(n_iter):
        cut = 0.5 * (lo + hi)
        below, above = x[x <= cut], x[x > cut]
        if below.size == 0 or above.size == 0:
            break
        new_lo, new_hi = float(below.mean()), float(above.mean())
        if new_lo == lo and new_hi == hi:
            break
        lo, hi = new_lo, new_hi
    return 0.5 * (lo + hi)


class TelegraphDigitizer(TransformerMixin, BaseEstimator):
    """Threshold each column of a voltage matrix into binary states.

    Parameters
    ----------
    threshold : float or array-like, optional
        Fixed threshold(s) in volts. When omitted, ``fit`` places one per
        column halfway between the two voltage levels.
    """

    def __init__(self, threshold=None):
        self.threshold = threshold

    def fit(self, X, y=None):
        X = validate_data(self, X, dtype=float)
        if self.threshold is None:
            self.thresholds_ = np.array([_two_level_midpoint(col) for col in X.T])
        else:
            t = np.broadcast_to(np.asarray(self.threshold, dtype=float), (X.shape[1],))
            self.thresholds_ = t.copy()
        return self

    def transform(self, X):
        check_is_fitted(self, "thresholds_")
        X = validate_data(self, X, dtype=float, reset=False)
        # ties resolve low
        return (X > self.thresholds_).astype(np.int8)


class PairMarkovEstimator(BaseEstimator):
    """Maximum-likelihood generator for a sampled pair of binary traces.

    Each observed single-device flip between consecutive samples counts as
    a transition; the rate estimate is the count divided by the time spent
    in the source state. Samples where both devices flip at once are
    ambiguous at the sampling resolution and are skipped.

    Parameters
    ----------
    dt : float
        Sampling interval in seconds.

    Attributes
    ----------
    generator_ : Generator4
    steady_state_ : ndarray of shape (4,)
    dwell_times_ : ndarray of shape (4,)
    correlation_ : float
        Stationary correlation implied by the fitted generator.
    n_double_flips_ : int
    """

    def __init__(self, dt=1.0):
        self.dt = dt

    def fit(self, X, y=None):
        X = validate_data(self, X, dtype=np.int64, ensure_min_samples=2)
        if X.shape[1] != 2:
            raise InvalidArgumentError("expected exactly two columns (one per device)")
        if not np.all((X == 0) | (X == 1)):
            raise InvalidArgumentError("X must be binary")
        if not self.dt > 0:
            raise InvalidArgumentError("dt must be > 0")
        codes = 2 * X[:, 0] + X[:, 1]
        src, dst = codes[:-1], codes[1:]
        counts = np.zeros((4, 4))
        np.add.at(counts, (src, dst), 1.0)
        occupancy = np.bincount(src, minlength=4) * self.dt
        double = [(0, 3), (3, 0), (1, 2), (2, 1)]
        self.n_double_flips_ = int(sum(counts[i, j] for i, j in double))
        for i, j in double:
            counts[i, j] = 0.0
        np.fill_diagonal(counts, 0.0)
        if np.any(occupancy == 0):
            raise InvalidArgumentError("every joint state must be visited to fit a generator")
        q = counts / occupancy[:, None]
        np.fill_diagonal(q, -q.sum(axis=1))
        self.generator_ = Generator4(q)
        self.steady_state_ = steady_state(self.generator_)
        self.dwell_times_ = joint_dwell_times(self.generator_)
        self.correlation_ = predict_correlation(self.generator_)
        return self

    def predict_proba(self, X=None):
        """Stationary joint-state probabilities (the same for every row of X)."""
        check_is_fitted(self, "generator_")
        n = 1 if X is None else check_array(X).shape[0]
        return np.tile(self.steady_state_, (n, 1))

    def score(self, X, y=None):
        """Negative total-variation distance between fitted and observed occupancy."""
        check_is_fitted(self, "generator_")
        X = check_array(X, dtype=np.int64)
        codes = 2 * X[:, 0] + X[:, 1]
        observed = np.bincount(codes, minlength=4) / codes.size
        return -0.5 * float(np.abs(observed - self.steady_state_).sum())

    def empirical_correlation(self, X):
        X = check_array(X, dtype=float)
        return pearson(X[:, 0], X[:, 1]).rho
