"""Exact Shapley attribution of the forward model's scalar outputs to the
three laser parameters.

The value of a feature coalition is the forest's conditional expectation:
walking a tree, splits on coalition features follow the input while splits
on the remaining features average both children weighted by their training
sample counts. With only 3 features all 8 coalitions are enumerated
exactly, so the attributions satisfy local accuracy by construction.

Scalar outputs are the unweighted average emissivity or the emissivity at a
chosen wavelength. Both are affine in the latent coefficients, so each leaf
reduces to one scalar up front and a coalition value becomes a weighted sum
over leaves; the per-input work is a handful of sparse matrix products.
"""

import csv
from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy import sparse

from .data import LaserParams

FEATURE_NAMES = ("power", "speed", "spacing")
_N_FEATURES = 3

# Shapley coalition weight |S|! (n - |S| - 1)! / n! for n = 3 features.
_COALITION_WEIGHT = {0: 1.0 / 3.0, 1: 1.0 / 6.0, 2: 1.0 / 3.0}
_ALL_SUBSETS = [
    frozenset(c)
    for size in range(_N_FEATURES + 1)
    for c in combinations(range(_N_FEATURES), size)
]


@dataclass
class ShapRow:
    """Attribution of one prediction: base_value + sum(phi) equals it."""

    input: LaserParams
    base_value: float
    phi: np.ndarray
    prediction: float


def _wavelength_index(grid, mode, nearest=False):
    if isinstance(mode, str) and mode.startswith("wl:"):
        wavelength = float(mode[3:])
    elif isinstance(mode, (int, float, np.floating)):
        wavelength = float(mode)
    else:
        raise ValueError(
            f"mode must be 'average' or 'wl:<wavelength>', got {mode!r}"
        )
    if not grid[0] <= wavelength <= grid[-1]:
        raise ValueError(
            f"wavelength {wavelength} outside grid range [{grid[0]}, {grid[-1]}]"
        )
    idx = int(np.argmin(np.abs(grid - wavelength)))
    if not nearest and abs(grid[idx] - wavelength) > 1e-9:
        raise ValueError(
            f"wavelength {wavelength} not on the grid "
            f"(nearest point {grid[idx]}); pass nearest=True to snap"
        )
    return idx


def _reduction_vector(pca, grid, mode, nearest=False):
    """Express the scalar output as r0 + q . coefficients."""
    if mode in ("average", "avg"):
        return float(pca.mean_.mean()), pca.components_.mean(axis=1)
    idx = _wavelength_index(grid, mode, nearest)
    return float(pca.mean_[idx]), pca.components_[:, idx].copy()


def scalar_output(bundle, x, mode="average", nearest=False):
    """Reduce the forward prediction at x to one emissivity scalar."""
    values = bundle.predict_values(np.asarray(x, dtype=np.float64))
    if mode in ("average", "avg"):
        return float(values.mean())
    return float(values[_wavelength_index(bundle.grid, mode, nearest)])


def tree_conditional_expectation(tree, x, feature_subset):
    """Conditional expectation of one tree given the features in the subset.

    Splits on subset features follow x; splits on other features return the
    sample-count-weighted average of both children; leaves return their
    value vector.
    """
    x = np.asarray(x, dtype=np.float64)
    subset = frozenset(int(f) for f in feature_subset)

    def rec(node):
        f = int(tree.feature[node])
        if f < 0:
            return tree.leaf_values[tree.leaf_slot[node]].copy()
        left, right = int(tree.left[node]), int(tree.right[node])
        if f in subset:
            child = left if x[f] <= tree.threshold[node] else right
            return rec(child)
        n_left = tree.n_samples[left]
        n_right = tree.n_samples[right]
        return (n_left * rec(left) + n_right * rec(right)) / (n_left + n_right)

    return rec(0)


class ShapExplainer:
    """Precomputed exact-Shapley evaluator for one (bundle, output) pair."""

    def __init__(self, bundle, mode="average", nearest=False):
        self.bundle = bundle
        self.mode = mode
        r0, q = _reduction_vector(bundle.pca, bundle.grid, mode, nearest)
        self._r0, self._q = r0, q
        self._build(bundle.forward)

    def _build(self, forest):
        trees = forest.trees_
        self._n_trees = len(trees)
        feat_parts, thr_parts = [], []
        scalars, static_w = [], []
        anc_rows = {(f, side): [] for f in range(_N_FEATURES) for side in (0, 1)}
        anc_cols = {(f, side): [] for f in range(_N_FEATURES) for side in (0, 1)}
        offset = 0
        for tree in trees:
            feat_parts.append(tree.feature)
            thr_parts.append(tree.threshold)
            stack = [(0, np.ones(_N_FEATURES), ())]
            while stack:
                node, weights, path = stack.pop()
                f = int(tree.feature[node])
                if f < 0:
                    row = len(scalars)
                    scalars.append(
                        self._r0 + tree.leaf_values[tree.leaf_slot[node]] @ self._q
                    )
                    static_w.append(weights)
                    for global_node, side, split_f in path:
                        anc_rows[(split_f, side)].append(row)
                        anc_cols[(split_f, side)].append(global_node)
                    continue
                left, right = int(tree.left[node]), int(tree.right[node])
                n_node = tree.n_samples[node]
                wl = weights.copy()
                wl[f] *= tree.n_samples[left] / n_node
                wr = weights.copy()
                wr[f] *= tree.n_samples[right] / n_node
                gn = offset + node
                stack.append((right, wr, path + ((gn, 1, f),)))
                stack.append((left, wl, path + ((gn, 0, f),)))
            offset += tree.n_nodes

        self._features = np.concatenate(feat_parts)
        self._thresholds = np.concatenate(thr_parts)
        self._scalars = np.asarray(scalars)
        self._static = np.vstack(static_w)  # (n_leaves, 3) marginal weights
        n_leaves = self._scalars.size
        n_nodes = self._features.size
        self._ancestors = {}
        for key in anc_rows:
            data = np.ones(len(anc_rows[key]))
            self._ancestors[key] = sparse.csr_matrix(
                (data, (anc_rows[key], anc_cols[key])), shape=(n_leaves, n_nodes)
            )

    def _coalition_values(self, x):
        x = np.asarray(x, dtype=np.float64)
        goes_left = (
            x[np.maximum(self._features, 0)] <= self._thresholds
        ).astype(np.float64)
        follow = []
        for f in range(_N_FEATURES):
            mismatches = self._ancestors[(f, 0)] @ (1.0 - goes_left)
            mismatches += self._ancestors[(f, 1)] @ goes_left
            follow.append((mismatches == 0).astype(np.float64))
        values = {}
        for subset in _ALL_SUBSETS:
            w = np.ones_like(self._scalars)
            for f in range(_N_FEATURES):
                w = w * (follow[f] if f in subset else self._static[:, f])
            values[subset] = float(self._scalars @ w) / self._n_trees
        return values

    def explain(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (_N_FEATURES,):
            raise ValueError(f"expected a parameter triple, got shape {x.shape}")
        v = self._coalition_values(x)
        phi = np.zeros(_N_FEATURES)
        for j in range(_N_FEATURES):
            rest = [f for f in range(_N_FEATURES) if f != j]
            for size in range(_N_FEATURES):
                for combo in combinations(rest, size):
                    s = frozenset(combo)
                    phi[j] += _COALITION_WEIGHT[size] * (
                        v[s | {j}] - v[s]
                    )
        full = frozenset(range(_N_FEATURES))
        return ShapRow(
            input=LaserParams.from_array(x),
            base_value=v[frozenset()],
            phi=phi,
            prediction=v[full],
        )


def exact_shap(bundle, x, mode="average", nearest=False):
    """Shapley attribution of one prediction over all 8 feature coalitions."""
    return ShapExplainer(bundle, mode, nearest).explain(x)


def shap_batch(bundle, inputs, mode="average", nearest=False):
    """Attributions for a batch of inputs plus the per-feature mean |phi|.

    Returns (rows, summary) where summary maps feature names to mean
    absolute attribution, the ranking used in beeswarm-style overviews.
    """
    inputs = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
    if inputs.shape[0] == 0:
        raise ValueError("need at least one input")
    explainer = ShapExplainer(bundle, mode, nearest)
    rows = [explainer.explain(x) for x in inputs]
    mean_abs = np.mean(np.abs(np.vstack([r.phi for r in rows])), axis=0)
    summary = dict(zip(FEATURE_NAMES, mean_abs.tolist()))
    return rows, summary


def write_shap_csv(rows, path):
    """Dependence-plot table: inputs, attributions, base value, prediction."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            list(FEATURE_NAMES)
            + [f"phi_{name}" for name in FEATURE_NAMES]
            + ["base_value", "prediction"]
        )
        for row in rows:
            writer.writerow(
                [repr(float(v)) for v in row.input]
                + [repr(float(v)) for v in row.phi]
                + [repr(float(row.base_value)), repr(float(row.prediction))]
            )
