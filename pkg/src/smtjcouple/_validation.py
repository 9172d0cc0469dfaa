"""Small input-validation helpers used by the public functions."""

import math

import numpy as np

from .errors import InvalidArgumentError


def check_finite(value, name):
    """Return ``value`` as float, raising if it is NaN or infinite."""
    try:
        x = float(value)
    except (TypeError, ValueError) as exc:
        raise InvalidArgumentError(f"{name} must be a real number, got {value!r}") from exc
    if not math.isfinite(x):
        raise InvalidArgumentError(f"{name} must be finite, got {value!r}")
    return x


def check_positive(value, name, strict=True):
    x = check_finite(value, name)
    if x < 0 or (strict and x == 0):
        bound = "> 0" if strict else ">= 0"
        raise InvalidArgumentError(f"{name} must be {bound}, got {x!r}")
    return x


def check_finite_array(values, name):
    arr = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise InvalidArgumentError(f"{name} contains non-finite values")
    return arr


def check_binary_series(values, name):
    """Coerce a 1-D 0/1 sequence to an int8 array."""
    arr = np.asarray(values)
    if arr.ndim != 1:
        raise InvalidArgumentError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size and not np.all((arr == 0) | (arr == 1)):
        raise InvalidArgumentError(f"{name} must contain only 0 and 1")
    return arr.astype(np.int8, copy=False)


def check_same_length(a, b, names=("a", "b")):
    if len(a) != len(b):
        raise InvalidArgumentError(
            f"{names[0]} and {names[1]} must have equal lengths ({len(a)} != {len(b)})"
        )
