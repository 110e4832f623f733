"""Accuracy and design-novelty metrics.

Spectrum errors are root-mean-square differences expressed as a percentage
of the theoretical emissivity range [0, 1]. Parameter novelty is the
normalized Euclidean parameter distance (NEPD): the per-coordinate
differences are min-max scaled by the design bounds so that 0 means
identical triples and 1 means a full-range difference in every coordinate.
"""

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .data import Bounds, DEFAULT_BOUNDS
from .validation import require_same_grid

EMISSIVITY_RANGE = 1.0  # theoretical max - min emissivity


def values_rmse(a, b):
    """Percent RMSE between two aligned value arrays."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return float(np.sqrt(np.mean((a - b) ** 2)) * 100.0 / EMISSIVITY_RANGE)


def spectrum_rmse(a, b):
    """Percent RMSE between two spectra on the same grid."""
    require_same_grid(a.wavelengths, b.wavelengths, "spectrum_rmse")
    return values_rmse(a.values, b.values)


def batch_rmse(true, pred):
    """Pooled and maximum percent RMSE over paired spectrum batches.

    The pooled value averages squared errors over every (instance,
    wavelength) cell; the maximum is the largest per-instance RMSE.
    """
    if len(true) == 0 or len(true) != len(pred):
        raise ValueError(
            f"need equal nonempty batches, got {len(true)} true / {len(pred)} predicted"
        )
    per_instance = [spectrum_rmse(t, p) for t, p in zip(true, pred)]
    sq = np.array([r**2 for r in per_instance])
    # Equal grid lengths make the pooled double sum the mean of per-instance
    # mean squares.
    return float(np.sqrt(np.mean(sq))), float(np.max(per_instance))


def nepd(true_p, pred_p, bounds: Bounds = DEFAULT_BOUNDS):
    """Normalized Euclidean parameter distance between two triples in [0, 1].

    Normalization uses the fixed design bounds, so values are comparable
    across experiments. Out-of-bounds parameters are not clamped; the result
    may then exceed 1 and a warning is emitted.
    """
    t = np.asarray(true_p, dtype=np.float64)
    p = np.asarray(pred_p, dtype=np.float64)
    if not (np.all(np.isfinite(t)) and np.all(np.isfinite(p))):
        raise ValueError("laser parameters must be finite")
    diff = (t - p) / bounds.span
    value = float(np.sqrt(np.sum(diff**2) / 3.0))
    if value > 1.0 + 1e-12:
        warnings.warn(
            f"NEPD {value:.3f} exceeds 1: a parameter lies outside the design bounds",
            stacklevel=2,
        )
    return value


def nepd_stats(pairs, bounds: Bounds = DEFAULT_BOUNDS):
    """(average, maximum) NEPD over (true, predicted) parameter pairs."""
    if len(pairs) == 0:
        raise ValueError("need at least one parameter pair")
    values = [nepd(t, p, bounds) for t, p in pairs]
    return float(np.mean(values)), float(np.max(values))


@dataclass
class EvalReport:
    """Per-instance and aggregate accuracy/novelty numbers for one evaluation."""

    rmse: list[float] = field(default_factory=list)
    nepd: list[float] = field(default_factory=list)

    @property
    def avg_rmse(self):
        return float(np.mean(self.rmse))

    @property
    def max_rmse(self):
        return float(np.max(self.rmse))

    @property
    def avg_nepd(self):
        return float(np.mean(self.nepd))

    @property
    def max_nepd(self):
        return float(np.max(self.nepd))

    def summary(self):
        return {
            "avg_rmse_pct": self.avg_rmse,
            "max_rmse_pct": self.max_rmse,
            "avg_nepd": self.avg_nepd,
            "max_nepd": self.max_nepd,
            "n_instances": len(self.rmse),
        }

    def to_json(self, include_instances=True):
        payload = self.summary()
        if include_instances:
            payload["rmse_pct"] = list(self.rmse)
            payload["nepd"] = list(self.nepd)
        return json.dumps(payload, indent=2)

    def write_csv(self, path):
        """Per-instance table usable for novelty-vs-error scatter plots."""
        with open(path, "w") as fh:
            fh.write("instance,rmse_pct,nepd\n")
            for i, (r, d) in enumerate(zip(self.rmse, self.nepd)):
                fh.write(f"{i},{r!r},{d!r}\n")
