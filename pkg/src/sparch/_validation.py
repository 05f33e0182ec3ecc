"""Input validation helpers shared across the public API."""

from __future__ import annotations

import numpy as np

from .exceptions import InvalidParameterError, UsageError

__all__ = [
    "as_float_vector",
    "as_float_matrix",
    "check_length",
    "check_positive",
    "check_nonnegative",
]


def as_float_vector(x, name: str, *, n: int | None = None) -> np.ndarray:
    """Coerce ``x`` to a 1-d float64 array, optionally of length ``n``."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1:
        raise UsageError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise UsageError(f"{name} contains non-finite values")
    if n is not None and arr.shape[0] != n:
        raise UsageError(f"{name} has length {arr.shape[0]}, expected {n}")
    return arr


def as_float_matrix(x, name: str, *, rows: int | None = None) -> np.ndarray:
    """Coerce ``x`` to a 2-d float64 array, optionally with ``rows`` rows."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise UsageError(f"{name} must be two-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise UsageError(f"{name} contains non-finite values")
    if rows is not None and arr.shape[0] != rows:
        raise UsageError(f"{name} has {arr.shape[0]} rows, expected {rows}")
    return arr


def check_length(x: np.ndarray, n: int, name: str) -> None:
    if x.shape[0] != n:
        raise UsageError(f"{name} has length {x.shape[0]}, expected {n}")


def check_positive(value: float, name: str) -> float:
    value = float(value)
    if not np.isfinite(value) or value <= 0.0:
        raise InvalidParameterError(f"{name} must be strictly positive, got {value}")
    return value


def check_nonnegative(value: float, name: str) -> float:
    value = float(value)
    if not np.isfinite(value) or value < 0.0:
        raise InvalidParameterError(f"{name} must be nonnegative, got {value}")
    return value
