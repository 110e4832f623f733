"""Multi-fidelity inverse design of laser-processed emissivity spectra.

An inverse random forest proposes candidate laser-parameter sets for a
target spectrum; each candidate is refined by adaptive differential
evolution against a forward random-forest surrogate operating in a
PCA-compressed spectrum space. The package also ships the accuracy/novelty
metrics, exact Shapley attribution for the forward model, evaluation
protocols, and a CLI.
"""

from .bundle import ModelBundle, fit_bundle
from .data import (
    Bounds,
    DEFAULT_BOUNDS,
    Dataset,
    LaserParams,
    Spectrum,
    SplitSpec,
    default_wavelength_grid,
    kfold_indices,
    load_dataset,
    load_target,
    make_step_target,
    shuffle_split,
    synth_generate,
    synthetic_emissivity,
    write_dataset,
    write_target,
)
from .ensemble import (
    DesignSolution,
    EnsembleConfig,
    dedupe_candidates,
    hf_invert,
    lf_invert,
    mf_invert,
)
from .errors import BundleFormatError, DataFormatError, GridMismatchError
from .explain import (
    ShapExplainer,
    ShapRow,
    exact_shap,
    scalar_output,
    shap_batch,
    tree_conditional_expectation,
    write_shap_csv,
)
from .forest import MultiOutputForest, Tree
from .harness import baseline_sweep, evaluate_on_test, learning_curve, time_inference
from .metrics import EvalReport, batch_rmse, nepd, nepd_stats, spectrum_rmse, values_rmse
from .optimizer import DEConfig, OptResult, lshade_minimize, population_schedule
from .pca import SpectrumPCA

__version__ = "0.1.0"

__all__ = [
    "Bounds",
    "BundleFormatError",
    "DEConfig",
    "DEFAULT_BOUNDS",
    "DataFormatError",
    "Dataset",
    "DesignSolution",
    "EnsembleConfig",
    "EvalReport",
    "GridMismatchError",
    "LaserParams",
    "ModelBundle",
    "MultiOutputForest",
    "OptResult",
    "ShapExplainer",
    "ShapRow",
    "Spectrum",
    "SpectrumPCA",
    "SplitSpec",
    "Tree",
    "baseline_sweep",
    "batch_rmse",
    "dedupe_candidates",
    "default_wavelength_grid",
    "evaluate_on_test",
    "exact_shap",
    "fit_bundle",
    "hf_invert",
    "kfold_indices",
    "learning_curve",
    "lf_invert",
    "load_dataset",
    "load_target",
    "lshade_minimize",
    "make_step_target",
    "mf_invert",
    "nepd",
    "nepd_stats",
    "population_schedule",
    "scalar_output",
    "shap_batch",
    "shuffle_split",
    "spectrum_rmse",
    "synth_generate",
    "synthetic_emissivity",
    "time_inference",
    "tree_conditional_expectation",
    "values_rmse",
    "write_dataset",
    "write_shap_csv",
    "write_target",
]
