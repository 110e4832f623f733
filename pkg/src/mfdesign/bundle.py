"""Trained model bundle: PCA + forward/inverse forests + bounds + grid.

On disk a bundle is a directory of JSON files (meta.json, pca.json,
forward.json and optionally inverse.json). Floats are written in shortest
round-trip decimal form, so save followed by load reproduces every number
bit for bit. Saving goes through a temporary directory that is renamed into
place, so a bundle directory is never left half written.
"""

import json
import shutil
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import Bounds, DEFAULT_BOUNDS, Dataset
from .errors import BundleFormatError
from .forest import MultiOutputForest
from .pca import SpectrumPCA
from .validation import check_grid

FORMAT_VERSION = 1

_META = "meta.json"
_PCA = "pca.json"
_FORWARD = "forward.json"
_INVERSE = "inverse.json"


@dataclass
class ModelBundle:
    pca: SpectrumPCA
    forward: MultiOutputForest
    inverse: MultiOutputForest | None
    bounds: Bounds
    grid: np.ndarray

    def __post_init__(self):
        self.grid = check_grid(self.grid)

    def predict_values(self, params):
        """Raw emissivity values the forward model assigns to parameters.

        Accepts a single triple or an (n, 3) batch; reconstructions are not
        clipped to [0, 1].
        """
        coeffs = self.forward.predict(np.asarray(params, dtype=np.float64))
        return self.pca.inverse_transform(coeffs)

    def save(self, directory):
        directory = Path(directory)
        tmp = directory.with_name(directory.name + ".tmp")
        if tmp.exists():
            shutil.rmtree(tmp)
        tmp.mkdir(parents=True)
        meta = {
            "format_version": FORMAT_VERSION,
            "bounds": self.bounds.to_dict(),
            "grid": self.grid.tolist(),
            "forward_params": self.forward.to_dict()["params"],
            "inverse_params": None
            if self.inverse is None
            else self.inverse.to_dict()["params"],
            "n_components": self.pca.n_components,
        }
        with (tmp / _META).open("w") as fh:
            json.dump(meta, fh, indent=2)
        _dump_compact(self.pca.to_dict(), tmp / _PCA)
        _dump_compact(self.forward.to_dict(), tmp / _FORWARD)
        if self.inverse is not None:
            _dump_compact(self.inverse.to_dict(), tmp / _INVERSE)
        if directory.exists():
            shutil.rmtree(directory)
        tmp.rename(directory)

    @classmethod
    def load(cls, directory):
        directory = Path(directory)
        if not directory.is_dir():
            raise FileNotFoundError(f"model bundle directory not found: {directory}")
        meta = _load_json(directory / _META)
        version = meta.get("format_version")
        if version != FORMAT_VERSION:
            raise BundleFormatError(
                f"unsupported bundle format version {version!r} "
                f"(expected {FORMAT_VERSION})"
            )
        try:
            pca = SpectrumPCA.from_dict(_load_json(directory / _PCA))
            forward = MultiOutputForest.from_dict(_load_json(directory / _FORWARD))
            inverse_path = directory / _INVERSE
            inverse = (
                MultiOutputForest.from_dict(_load_json(inverse_path))
                if inverse_path.exists()
                else None
            )
            bounds = Bounds.from_dict(meta["bounds"])
            grid = np.asarray(meta["grid"], dtype=np.float64)
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, BundleFormatError):
                raise
            raise BundleFormatError(f"corrupt model bundle in {directory}: {exc}") from exc
        return cls(pca=pca, forward=forward, inverse=inverse, bounds=bounds, grid=grid)


def _dump_compact(obj, path):
    with Path(path).open("w") as fh:
        json.dump(obj, fh, separators=(",", ":"))


def _load_json(path):
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"missing bundle file: {path}")
    try:
        with path.open() as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise BundleFormatError(f"{path} is not valid JSON: {exc}") from exc


def fit_bundle(
    ds: Dataset,
    n_components=50,
    forward_trees=450,
    inverse_trees=20,
    max_depth=10,
    min_samples_leaf=1,
    bounds: Bounds = DEFAULT_BOUNDS,
    seed=0,
    with_inverse=True,
):
    """Train the full bundle on one dataset.

    The PCA is fit on the training spectra; the forward forest maps laser
    parameters to latent coefficients, the inverse forest maps coefficients
    back to parameters. Forward and inverse forests seed their per-tree
    streams from seed and seed + 1 respectively.
    """
    pca = SpectrumPCA(n_components=n_components).fit(ds.emissivity, grid=ds.grid)
    coeffs = pca.transform(ds.emissivity)
    forward = MultiOutputForest(
        n_estimators=forward_trees,
        max_depth=max_depth,
        min_samples_leaf=min_samples_leaf,
        max_features="all",
        random_state=seed,
    ).fit(ds.params, coeffs)
    inverse = None
    if with_inverse:
        inverse = MultiOutputForest(
            n_estimators=inverse_trees,
            max_depth=max_depth,
            min_samples_leaf=min_samples_leaf,
            max_features="sqrt",
            random_state=seed + 1,
        ).fit(coeffs, ds.params)
    return ModelBundle(
        pca=pca, forward=forward, inverse=inverse, bounds=bounds, grid=ds.grid
    )
