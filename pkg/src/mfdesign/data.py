"""Datasets of (laser parameters, emissivity spectrum) pairs.

Covers CSV ingestion, deterministic splitting, K-fold index generation, and a
synthetic emissivity generator used for desk-scale verification in place of
fabrication and FTIR measurement.
"""

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import DataFormatError
from .validation import check_grid

PARAM_COLUMNS = ("power_w", "speed_mm_s", "spacing_um")
EPS_PREFIX = "eps_"

# Fabrication grid: 12 x 70 x 14 parameter combinations.
POWER_VALUES = np.round(np.arange(0.2, 1.31, 0.1), 1)
SPEED_VALUES = np.arange(10.0, 701.0, 10.0)
SPACING_VALUES = np.arange(15.0, 28.1, 1.0)

WAVELENGTH_MIN_UM = 2.5
WAVELENGTH_MAX_UM = 12.0


class LaserParams(NamedTuple):
    """A (power W, speed mm/s, spacing um) design point."""

    power: float
    speed: float
    spacing: float

    @classmethod
    def from_array(cls, arr):
        arr = np.asarray(arr, dtype=np.float64)
        if arr.shape != (3,):
            raise ValueError(f"expected 3 laser parameters, got shape {arr.shape}")
        return cls(float(arr[0]), float(arr[1]), float(arr[2]))

    def to_array(self):
        return np.array(self, dtype=np.float64)


@dataclass(frozen=True)
class Bounds:
    """Box bounds on the three laser parameters."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=np.float64)
        upper = np.asarray(self.upper, dtype=np.float64)
        if lower.shape != (3,) or upper.shape != (3,):
            raise ValueError("bounds must each hold 3 values")
        if not np.all(lower < upper):
            raise ValueError(f"degenerate bounds: lower={lower}, upper={upper}")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def span(self):
        return self.upper - self.lower

    def contains(self, params, atol=1e-12):
        p = np.asarray(params, dtype=np.float64)
        return bool(
            np.all(p >= self.lower - atol) and np.all(p <= self.upper + atol)
        )

    def clip(self, params):
        return np.clip(np.asarray(params, dtype=np.float64), self.lower, self.upper)

    def to_dict(self):
        return {"lower": self.lower.tolist(), "upper": self.upper.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(np.asarray(d["lower"]), np.asarray(d["upper"]))


DEFAULT_BOUNDS = Bounds(
    lower=np.array([0.2, 10.0, 15.0]),
    upper=np.array([1.3, 700.0, 28.0]),
)


@dataclass
class Spectrum:
    """Emissivity values on a strictly increasing wavelength grid (um)."""

    wavelengths: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.wavelengths = check_grid(self.wavelengths, "wavelengths")
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != self.wavelengths.shape:
            raise ValueError(
                f"values length {self.values.shape} does not match grid "
                f"{self.wavelengths.shape}"
            )

    def __len__(self):
        return self.wavelengths.size

    @property
    def is_physical(self):
        """Whether all values lie in [0, 1] (model reconstructions may not)."""
        return bool(np.all(self.values >= 0.0) and np.all(self.values <= 1.0))


@dataclass
class Dataset:
    """Laser-parameter rows paired with spectra on one shared grid."""

    grid: np.ndarray
    params: np.ndarray
    emissivity: np.ndarray

    def __post_init__(self):
        self.grid = check_grid(self.grid)
        self.params = np.asarray(self.params, dtype=np.float64)
        self.emissivity = np.asarray(self.emissivity, dtype=np.float64)
        if self.params.ndim != 2 or self.params.shape[1] != 3:
            raise ValueError(f"params must have shape (n, 3), got {self.params.shape}")
        if self.emissivity.shape != (self.params.shape[0], self.grid.size):
            raise ValueError(
                f"emissivity shape {self.emissivity.shape} does not match "
                f"{self.params.shape[0]} rows x {self.grid.size} wavelengths"
            )

    def __len__(self):
        return self.params.shape[0]

    def spectrum(self, i):
        return Spectrum(self.grid, self.emissivity[i])

    def laser_params(self, i):
        return LaserParams.from_array(self.params[i])

    def subset(self, indices):
        indices = np.asarray(indices, dtype=np.intp)
        return Dataset(self.grid, self.params[indices], self.emissivity[indices])

    def validate_bounds(self, bounds=DEFAULT_BOUNDS):
        """Raise if any row's parameters fall outside the given box."""
        low = np.min(self.params, axis=0)
        high = np.max(self.params, axis=0)
        if np.any(low < bounds.lower - 1e-12) or np.any(high > bounds.upper + 1e-12):
            raise ValueError(
                f"dataset parameters exceed bounds "
                f"[{bounds.lower}, {bounds.upper}]: min={low}, max={high}"
            )


@dataclass(frozen=True)
class SplitSpec:
    train_count: int
    seed: int = 0


def default_wavelength_grid(n_points=101):
    """Evenly spaced grid over the measured 2.5-12 um band."""
    if n_points < 2:
        raise ValueError("grid needs at least 2 points")
    return np.linspace(WAVELENGTH_MIN_UM, WAVELENGTH_MAX_UM, n_points)


def _parse_header(header):
    if len(header) < 4:
        raise DataFormatError(
            f"header must contain {PARAM_COLUMNS} plus at least one "
            f"{EPS_PREFIX}<wavelength> column, got {len(header)} columns"
        )
    if tuple(header[:3]) != PARAM_COLUMNS:
        raise DataFormatError(
            f"expected leading columns {PARAM_COLUMNS}, got {tuple(header[:3])}"
        )
    return _parse_eps_columns(header[3:])


def _parse_eps_columns(columns):
    grid = []
    for name in columns:
        if not name.startswith(EPS_PREFIX):
            raise DataFormatError(f"expected '{EPS_PREFIX}<wavelength>' column, got {name!r}")
        try:
            grid.append(float(name[len(EPS_PREFIX):]))
        except ValueError:
            raise DataFormatError(f"cannot parse wavelength from column {name!r}") from None
    grid = np.asarray(grid, dtype=np.float64)
    if np.any(np.diff(grid) <= 0):
        raise DataFormatError("wavelength columns must be strictly increasing")
    return grid


def _parse_row(row, expected_len, row_number, header):
    if len(row) != expected_len:
        raise DataFormatError(
            f"row {row_number}: expected {expected_len} cells, got {len(row)}"
        )
    out = np.empty(expected_len, dtype=np.float64)
    for j, cell in enumerate(row):
        try:
            out[j] = float(cell)
        except ValueError:
            raise DataFormatError(
                f"row {row_number}, column {header[j]!r}: "
                f"cannot parse {cell!r} as a number"
            ) from None
    return out


def load_dataset(path, bounds=None):
    """Read a dataset CSV (see write_dataset for the column convention).

    bounds, when given, enables validation that every row's parameters lie
    inside the box.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError(f"{path}: empty file") from None
        grid = _parse_header(header)
        rows = [
            _parse_row(row, len(header), i + 2, header)
            for i, row in enumerate(reader)
        ]
    if not rows:
        raise DataFormatError(f"{path}: no data rows")
    table = np.vstack(rows)
    ds = Dataset(grid, table[:, :3], table[:, 3:])
    if bounds is not None:
        ds.validate_bounds(bounds)
    return ds


def _format_grid_column(wl):
    return f"{EPS_PREFIX}{wl:.4f}"


def write_dataset(ds, path):
    """Write a dataset CSV: power_w, speed_mm_s, spacing_um, eps_<wavelength>...

    Wavelengths are printed to 4 decimals; values use shortest round-trip
    decimal form, so writing a loaded canonical file reproduces it exactly.
    """
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(PARAM_COLUMNS) + [_format_grid_column(w) for w in ds.grid])
        for i in range(len(ds)):
            writer.writerow(
                [repr(float(v)) for v in ds.params[i]]
                + [repr(float(v)) for v in ds.emissivity[i]]
            )


def load_target(path):
    """Read a single-spectrum CSV holding only eps_<wavelength> columns."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError(f"{path}: empty file") from None
        grid = _parse_eps_columns(header)
        rows = [_parse_row(row, len(header), i + 2, header) for i, row in enumerate(reader)]
    if len(rows) != 1:
        raise DataFormatError(f"{path}: target file must hold exactly 1 row, got {len(rows)}")
    return Spectrum(grid, rows[0])


def write_target(spectrum, path):
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([_format_grid_column(w) for w in spectrum.wavelengths])
        writer.writerow([repr(float(v)) for v in spectrum.values])


def shuffle_split(ds, spec):
    """Deterministically shuffle and partition a dataset into (train, test)."""
    n = len(ds)
    if not 0 < spec.train_count < n:
        raise ValueError(f"train_count must be in (0, {n}), got {spec.train_count}")
    perm = np.random.default_rng(spec.seed).permutation(n)
    return ds.subset(perm[: spec.train_count]), ds.subset(perm[spec.train_count:])


def kfold_indices(n, k, seed=0):
    """Shuffled K-fold split of range(n): list of (train_idx, val_idx) pairs.

    Validation folds are disjoint, jointly exhaustive, and differ in size by
    at most one.
    """
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    if k > n:
        raise ValueError(f"k={k} exceeds sample count n={n}")
    perm = np.random.default_rng(seed).permutation(n)
    folds = np.array_split(perm, k)
    out = []
    for i, fold in enumerate(folds):
        train = np.concatenate([f for j, f in enumerate(folds) if j != i])
        out.append((train, fold))
    return out


def synthetic_emissivity(params, grid):
    """Noiseless synthetic emissivity surface.

    The response depends on the deposited energy dose power/(speed*spacing):
    emissivity rises from the pristine baseline 0.14 toward 1.0 with dose,
    and tilts downward across the band at low dose. The ratio form makes
    distinct parameter triples with equal dose produce identical spectra,
    reproducing the one-to-many structure of the measured data.
    """
    params = np.asarray(params, dtype=np.float64)
    grid = np.asarray(grid, dtype=np.float64)
    power = params[..., 0]
    speed = params[..., 1]
    spacing = params[..., 2]
    dose = power / (speed * spacing * 1e-3)
    depth = 1.0 - np.exp(-40.0 * dose)
    tilt = 0.55 * np.exp(-3.0 * dose)
    shape = 1.0 - tilt[..., None] * (grid - WAVELENGTH_MIN_UM) / (
        WAVELENGTH_MAX_UM - WAVELENGTH_MIN_UM
    )
    return 0.14 + 0.86 * depth[..., None] * shape


def synth_generate(n, grid, noise_sd=0.01, seed=0):
    """Sample n parameter triples from the fabrication grid and evaluate the
    synthetic surface, adding Gaussian noise clipped to [0, 1]."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if noise_sd < 0:
        raise ValueError(f"noise_sd must be >= 0, got {noise_sd}")
    grid = check_grid(grid)
    rng = np.random.default_rng(seed)
    params = np.column_stack(
        [
            rng.choice(POWER_VALUES, size=n),
            rng.choice(SPEED_VALUES, size=n),
            rng.choice(SPACING_VALUES, size=n),
        ]
    )
    values = synthetic_emissivity(params, grid)
    if noise_sd > 0:
        values = values + rng.normal(0.0, noise_sd, size=values.shape)
    return Dataset(grid, params, np.clip(values, 0.0, 1.0))


def make_step_target(grid, cutoff):
    """Ideal step spectrum: 1 below the cutoff wavelength, 0 at and above it.

    A cutoff exactly at the top of the grid yields the constant-one
    (blackbody) target rather than zeroing the last point.
    """
    grid = check_grid(grid)
    if not grid[0] <= cutoff <= grid[-1]:
        raise ValueError(
            f"cutoff {cutoff} outside grid range [{grid[0]}, {grid[-1]}]"
        )
    if cutoff == grid[-1]:
        return Spectrum(grid, np.ones_like(grid))
    return Spectrum(grid, (grid < cutoff).astype(np.float64))
