"""Input checking helpers shared by the functional API and the estimators."""
from __future__ import annotations

import math

import numpy as np
from sklearn.utils.validation import check_array

from .exceptions import ParameterError

SEED_MODULUS = 2**64


def as_entropy(seed) -> int:
    """Map any integer seed (negative allowed) onto a non-negative 64-bit value."""
    if seed is None:
        raise ParameterError("a seed is required for reproducible runs")
    try:
        return int(seed) % SEED_MODULUS
    except (TypeError, ValueError) as exc:
        raise ParameterError(f"seed must be an integer, got {seed!r}") from exc


def check_positive(name: str, value) -> float:
    try:
        value = float(value)
    except (TypeError, ValueError) as exc:
        raise ParameterError(f"{name} must be a number, got {value!r}") from exc
    if not (math.isfinite(value) and value > 0):
        raise ParameterError(f"{name} must be positive and finite, got {value}")
    return value


def check_states(states, n: int | None = None) -> np.ndarray:
    """2-D finite float array of opinion states, one row per timestep."""
    try:
        states = check_array(states, dtype=np.float64, ensure_min_samples=1)
    except ValueError as exc:
        raise ParameterError(str(exc)) from exc
    if n is not None and states.shape[1] != n:
        raise ParameterError(f"states must have {n} columns, got {states.shape[1]}")
    return states


def check_vector(name: str, v, n: int) -> np.ndarray:
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.shape != (n,):
        raise ParameterError(f"{name} must have length {n}, got {v.shape[0]}")
    if not np.all(np.isfinite(v)):
        raise ParameterError(f"{name} contains non-finite values")
    return v


def check_rows(A, name: str = "A") -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim == 1:
        A = A[None, :]
    if A.ndim != 2:
        raise ParameterError(f"{name} must be a list of equal-length rows")
    if not np.all(np.isfinite(A)):
        raise ParameterError(f"{name} contains non-finite values")
    return A
