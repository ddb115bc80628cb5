"""Input validation helpers shared by the estimators and the functional API."""

from __future__ import annotations

import numbers

import numpy as np


class PreconditionError(ValueError):
    """An operation was called with inputs outside its contract."""


class NumericalError(RuntimeError):
    """A numerical stage produced an invalid result (e.g. a broken triangle)."""


def check_positive(value, name, *, strict=True):
    if not isinstance(value, numbers.Real) or not np.isfinite(value):
        raise PreconditionError(f"{name} must be a finite real number, got {value!r}")
    if strict and value <= 0:
        raise PreconditionError(f"{name} must be > 0, got {value!r}")
    if not strict and value < 0:
        raise PreconditionError(f"{name} must be >= 0, got {value!r}")
    return float(value)


def check_count(value, name, minimum=1):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise PreconditionError(f"{name} must be an integer, got {value!r}")
    if value < minimum:
        raise PreconditionError(f"{name} must be >= {minimum}, got {value}")
    return int(value)


def check_unit_vector(v, name="v", dim=2, atol=1e-9):
    """Return ``v`` as a float array, rejecting anything that is not unit length."""
    arr = np.asarray(v, dtype=float).reshape(-1)
    if arr.shape != (dim,):
        raise PreconditionError(f"{name} must have shape ({dim},), got {arr.shape}")
    norm = np.linalg.norm(arr)
    if abs(norm - 1.0) > atol:
        raise PreconditionError(f"{name} must be a unit vector, |{name}|={norm:.6g}")
    return arr


def check_points(points, name="points", dim=2, allow_empty=False):
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 1 and arr.size == dim:
        arr = arr.reshape(1, dim)
    if arr.ndim != 2 or (arr.size and arr.shape[1] != dim):
        raise PreconditionError(f"{name} must be an (n, {dim}) array, got shape {arr.shape}")
    if not allow_empty and arr.shape[0] == 0:
        raise PreconditionError(f"{name} must be nonempty")
    if not np.all(np.isfinite(arr)):
        raise PreconditionError(f"{name} contains non-finite values")
    return arr.reshape(-1, dim)


def check_vertex_indices(indices, n_vertices, name="vertices"):
    arr = np.atleast_1d(np.asarray(indices))
    if arr.size == 0:
        raise PreconditionError(f"{name} must be nonempty")
    if not np.issubdtype(arr.dtype, np.integer):
        raise PreconditionError(f"{name} must be integer vertex ids")
    if arr.min() < 0 or arr.max() >= n_vertices:
        raise PreconditionError(f"{name} out of range [0, {n_vertices})")
    return arr.astype(np.intp)


def check_random_state(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)
