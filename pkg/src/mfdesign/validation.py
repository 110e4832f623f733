"""Input validation helpers used by the estimators and pipeline functions."""

import numpy as np

from .errors import GridMismatchError

GRID_ATOL = 1e-9


def as_float_matrix(X, name="X"):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {X.shape}")
    if X.shape[0] == 0 or X.shape[1] == 0:
        raise ValueError(f"{name} must be non-empty, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError(f"{name} contains non-finite values")
    return X


def as_float_vector(x, name="x"):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError(f"{name} must be 1-dimensional, got shape {x.shape}")
    return x


def check_grid(grid, name="grid"):
    grid = as_float_vector(grid, name)
    if grid.size == 0:
        raise ValueError(f"{name} must be non-empty")
    if np.any(np.diff(grid) <= 0):
        raise ValueError(f"{name} must be strictly increasing")
    return grid


def grids_match(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return a.shape == b.shape and np.allclose(a, b, rtol=0.0, atol=GRID_ATOL)


def require_same_grid(a, b, context=""):
    if not grids_match(a, b):
        where = f" in {context}" if context else ""
        raise GridMismatchError(
            f"wavelength grids differ{where}: {len(np.atleast_1d(a))} vs "
            f"{len(np.atleast_1d(b))} points"
        )
