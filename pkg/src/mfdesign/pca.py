"""Linear compression of spectra to latent coefficients and back."""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .data import Spectrum
from .validation import as_float_matrix, check_grid, require_same_grid

_ZERO_SV_TOL = 1e-12


class SpectrumPCA(BaseEstimator, TransformerMixin):
    """Plain centered PCA over spectra, fit via SVD of the centered matrix.

    No whitening or variance scaling is applied: emissivity features share
    units. Component signs are fixed (largest-magnitude entry positive) so
    refitting on identical data reproduces the model bit for bit.

    Parameters
    ----------
    n_components : int
        Number of principal components retained.
    """

    def __init__(self, n_components=50):
        self.n_components = n_components

    def fit(self, X, y=None, grid=None):
        """Fit on a (n_spectra, n_wavelengths) value matrix.

        grid, when given, is stored so single spectra can be checked against
        the model's wavelength axis.
        """
        X = as_float_matrix(X, "spectra")
        n, w = X.shape
        if n < 2:
            raise ValueError(f"need at least 2 spectra to fit, got {n}")
        c = self.n_components
        if not 1 <= c <= min(n, w):
            raise ValueError(
                f"n_components must be in [1, {min(n, w)}] for {n}x{w} data, got {c}"
            )
        if grid is not None:
            grid = check_grid(grid)
            if grid.size != w:
                raise ValueError(
                    f"grid has {grid.size} points but spectra have {w} values"
                )
        self.grid_ = grid
        self.mean_ = X.mean(axis=0)
        _, s, vt = np.linalg.svd(X - self.mean_, full_matrices=False)
        components = vt[:c].copy()
        # Deterministic sign: flip rows whose largest-magnitude entry is negative.
        anchors = np.argmax(np.abs(components), axis=1)
        flip = components[np.arange(c), anchors] < 0
        components[flip] *= -1.0
        self.components_ = components
        self.singular_values_ = s[:c].copy()
        self.zero_variance_ = bool(np.all(s <= _ZERO_SV_TOL))
        return self

    def _check_fitted(self):
        if not hasattr(self, "components_"):
            raise NotFittedError("SpectrumPCA instance is not fitted yet")

    def transform(self, X):
        """Project values onto the components: (..., n_wavelengths) -> (..., c)."""
        self._check_fitted()
        X = np.asarray(X, dtype=np.float64)
        if X.shape[-1] != self.mean_.size:
            raise ValueError(
                f"expected {self.mean_.size} values per spectrum, got {X.shape[-1]}"
            )
        return (X - self.mean_) @ self.components_.T

    def inverse_transform(self, coeffs):
        """Reconstruct values from coefficients: (..., c) -> (..., n_wavelengths).

        Reconstructions are not clipped to [0, 1]; errors against targets are
        computed on the raw values.
        """
        self._check_fitted()
        coeffs = np.asarray(coeffs, dtype=np.float64)
        if coeffs.shape[-1] != self.components_.shape[0]:
            raise ValueError(
                f"expected {self.components_.shape[0]} coefficients, "
                f"got {coeffs.shape[-1]}"
            )
        return self.mean_ + coeffs @ self.components_

    def compress(self, spectrum: Spectrum):
        """Coefficients of one spectrum, verifying it lives on the model grid."""
        self._check_fitted()
        if self.grid_ is not None:
            require_same_grid(self.grid_, spectrum.wavelengths, "compress")
        return self.transform(spectrum.values)

    def decompress(self, coeffs):
        """Spectrum reconstruction (requires the model to carry a grid)."""
        self._check_fitted()
        if self.grid_ is None:
            raise ValueError("model carries no wavelength grid; use inverse_transform")
        return Spectrum(self.grid_, self.inverse_transform(coeffs))

    def to_dict(self):
        self._check_fitted()
        return {
            "n_components": self.n_components,
            "mean": self.mean_.tolist(),
            "components": self.components_.tolist(),
            "singular_values": self.singular_values_.tolist(),
            "zero_variance": self.zero_variance_,
            "grid": None if self.grid_ is None else self.grid_.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        model = cls(n_components=int(d["n_components"]))
        model.mean_ = np.asarray(d["mean"], dtype=np.float64)
        model.components_ = np.asarray(d["components"], dtype=np.float64)
        model.singular_values_ = np.asarray(d["singular_values"], dtype=np.float64)
        model.zero_variance_ = bool(d["zero_variance"])
        model.grid_ = None if d["grid"] is None else np.asarray(d["grid"], dtype=np.float64)
        return model
