"""Inverse-design pipelines.

The multi-fidelity path compresses the target spectrum, asks each tree of
the inverse forest for a candidate parameter set, removes exact duplicates,
then refines every candidate with an independent optimizer run against the
forward surrogate. Candidates are returned ranked by fitness (percent RMSE
between the target and the forward-predicted spectrum).

Two single-fidelity baselines share the machinery: the low-fidelity path
returns the inverse forest's aggregate prediction without refinement, and
the high-fidelity path runs the optimizer from a random population with no
warm start.
"""

from dataclasses import dataclass

import numpy as np

from .bundle import ModelBundle
from .data import LaserParams, Spectrum
from .metrics import values_rmse
from .optimizer import DEConfig, lshade_minimize


@dataclass(frozen=True)
class EnsembleConfig:
    """Knobs of one inversion run.

    n_estimators selects how many of the inverse forest's trees propose
    candidates (None uses all of them); n_max and f0 are the per-candidate
    refinement budget and early-stop fitness threshold.
    """

    n_estimators: int | None = 20
    n_max: int = 25
    f0: float = 2.0
    top_k: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.n_estimators is not None and self.n_estimators < 1:
            raise ValueError(f"n_estimators must be >= 1, got {self.n_estimators}")
        if self.top_k < 1:
            raise ValueError(f"top_k must be >= 1, got {self.top_k}")
        if self.n_estimators is not None and self.top_k > self.n_estimators:
            raise ValueError(
                f"top_k ({self.top_k}) cannot exceed n_estimators ({self.n_estimators})"
            )


@dataclass
class DesignSolution:
    """One candidate parameter set with its fitness and provenance."""

    params: LaserParams
    fitness: float
    source_tree: int | None
    refined: bool
    evals_used: int

    def to_dict(self):
        return {
            "params": {
                "power_w": self.params.power,
                "speed_mm_s": self.params.speed,
                "spacing_um": self.params.spacing,
            },
            "fitness_pct": self.fitness,
            "source_tree": self.source_tree,
            "refined": self.refined,
            "evals_used": self.evals_used,
        }


def target_fitness(bundle: ModelBundle, target: Spectrum):
    """Fitness closure: percent RMSE of the forward-predicted spectrum."""
    bundle.pca.compress(target)  # validates the grid up front
    target_values = target.values

    def fitness(params):
        return values_rmse(target_values, bundle.predict_values(np.asarray(params)))

    return fitness


def dedupe_candidates(candidates):
    """Drop exact duplicates (all three coordinates equal), keeping first
    occurrences in order."""
    seen = set()
    out = []
    for cand in candidates:
        key = tuple(float(v) for v in np.asarray(cand))
        if key not in seen:
            seen.add(key)
            out.append(cand)
    return out


def _dedupe_with_source(candidates):
    seen = set()
    out = []
    for tree_idx, cand in enumerate(candidates):
        key = tuple(float(v) for v in cand)
        if key not in seen:
            seen.add(key)
            out.append((tree_idx, cand))
    return out


def _candidate_seed(seed, index):
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


def _tree_candidates(bundle, target, cfg):
    if bundle.inverse is None:
        raise ValueError("bundle has no inverse model; cannot generate candidates")
    coeffs = bundle.pca.compress(target)
    per_tree = bundle.inverse.predict_per_tree(coeffs)
    if cfg.n_estimators is not None:
        if cfg.n_estimators > per_tree.shape[0]:
            raise ValueError(
                f"requested {cfg.n_estimators} candidate trees but the inverse "
                f"forest has only {per_tree.shape[0]}"
            )
        per_tree = per_tree[: cfg.n_estimators]
    # Leaf means are convex combinations of in-bounds training rows, so
    # clipping is a no-op on clean models and a guard on corrupted ones.
    return np.clip(per_tree, bundle.bounds.lower, bundle.bounds.upper)


def mf_invert(bundle: ModelBundle, target: Spectrum, cfg: EnsembleConfig):
    """Multi-fidelity inversion: ranked list of refined design solutions.

    Deterministic for a fixed config: each deduplicated candidate refines in
    its own optimizer run seeded by (seed, candidate index), so adding trees
    never changes the refinement of shared candidates.
    """
    candidates = _tree_candidates(bundle, target, cfg)
    fitness = target_fitness(bundle, target)
    solutions = []
    for idx, (tree_idx, cand) in enumerate(_dedupe_with_source(candidates)):
        de_cfg = DEConfig(
            max_evals=cfg.n_max,
            fitness_threshold=cfg.f0,
            seed=_candidate_seed(cfg.seed, idx),
        )
        res = lshade_minimize(fitness, bundle.bounds, de_cfg, warm_starts=[cand])
        solutions.append(
            DesignSolution(
                params=res.best_x,
                fitness=res.best_fitness,
                source_tree=tree_idx,
                refined=not np.array_equal(res.best_x.to_array(), cand),
                evals_used=res.evals_used,
            )
        )
    solutions.sort(key=lambda s: (s.fitness, s.source_tree))
    return solutions[: cfg.top_k]


def lf_invert(bundle: ModelBundle, target: Spectrum, cfg: EnsembleConfig):
    """Low-fidelity baseline: the averaged per-tree prediction, unrefined.

    The fitness is still evaluated through the forward model for reporting,
    but no optimizer evaluations are consumed.
    """
    candidates = _tree_candidates(bundle, target, cfg)
    params = np.clip(
        candidates.mean(axis=0), bundle.bounds.lower, bundle.bounds.upper
    )
    fitness = target_fitness(bundle, target)
    return DesignSolution(
        params=LaserParams.from_array(params),
        fitness=fitness(params),
        source_tree=None,
        refined=False,
        evals_used=0,
    )


def hf_invert(bundle: ModelBundle, target: Spectrum, cfg: EnsembleConfig):
    """High-fidelity baseline: one optimizer run from a random population."""
    fitness = target_fitness(bundle, target)
    de_cfg = DEConfig(
        max_evals=cfg.n_max, fitness_threshold=cfg.f0, seed=cfg.seed
    )
    res = lshade_minimize(fitness, bundle.bounds, de_cfg, warm_starts=[])
    return DesignSolution(
        params=res.best_x,
        fitness=res.best_fitness,
        source_tree=None,
        refined=True,
        evals_used=res.evals_used,
    )


def solutions_to_dicts(solutions, bundle=None, include_spectra=False):
    """JSON-ready rows, optionally with each solution's predicted spectrum."""
    rows = []
    for sol in solutions:
        row = sol.to_dict()
        if include_spectra:
            if bundle is None:
                raise ValueError("bundle required to include predicted spectra")
            row["predicted_spectrum"] = bundle.predict_values(
                sol.params.to_array()
            ).tolist()
        rows.append(row)
    return rows
