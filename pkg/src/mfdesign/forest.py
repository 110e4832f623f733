"""Multi-output regression decision trees and random forests.

Both surrogates of the design pipeline are instances of the same estimator:
the forward model maps 3 laser parameters to latent spectrum coefficients,
the inverse model maps latent coefficients back to laser parameters. Unlike
generic forest libraries, per-tree predictions are a first-class operation
here: the inverse model's individual trees supply the candidate design sets.

Trees are stored as flat node arrays with explicit child indices, which is
also the serialized layout.
"""

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.exceptions import NotFittedError

from .validation import as_float_matrix

_PREDICT_CHUNK = 256


@dataclass
class Tree:
    """Flat-array decision tree.

    feature is -1 at leaves (threshold/left/right then unused); leaf_values
    holds one output vector per leaf, ordered by node index. n_samples counts
    the training rows routed through each node, so a parent's count equals
    the sum of its children's.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    n_samples: np.ndarray
    leaf_values: np.ndarray
    leaf_slot: np.ndarray = field(init=False)

    def __post_init__(self):
        self.feature = np.asarray(self.feature, dtype=np.int32)
        self.threshold = np.asarray(self.threshold, dtype=np.float64)
        self.left = np.asarray(self.left, dtype=np.int32)
        self.right = np.asarray(self.right, dtype=np.int32)
        self.n_samples = np.asarray(self.n_samples, dtype=np.int64)
        self.leaf_values = np.atleast_2d(np.asarray(self.leaf_values, dtype=np.float64))
        is_leaf = self.feature < 0
        if int(is_leaf.sum()) != self.leaf_values.shape[0]:
            raise ValueError(
                f"{int(is_leaf.sum())} leaves but {self.leaf_values.shape[0]} leaf values"
            )
        slot = np.full(self.feature.size, -1, dtype=np.int64)
        slot[is_leaf] = np.arange(self.leaf_values.shape[0])
        self.leaf_slot = slot

    @property
    def n_nodes(self):
        return self.feature.size

    @property
    def n_leaves(self):
        return self.leaf_values.shape[0]

    def is_leaf(self, node):
        return self.feature[node] < 0

    def predict(self, x):
        node = 0
        while self.feature[node] >= 0:
            if x[self.feature[node]] <= self.threshold[node]:
                node = self.left[node]
            else:
                node = self.right[node]
        return self.leaf_values[self.leaf_slot[node]]

    def to_dict(self):
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "n_samples": self.n_samples.tolist(),
            "leaf_values": self.leaf_values.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            feature=np.asarray(d["feature"]),
            threshold=np.asarray(d["threshold"]),
            left=np.asarray(d["left"]),
            right=np.asarray(d["right"]),
            n_samples=np.asarray(d["n_samples"]),
            leaf_values=np.asarray(d["leaf_values"]),
        )


def _is_constant(Y):
    return bool(np.all(Y == Y[0]))


def _best_split(Xn, Yn, feats, min_samples_leaf):
    """Exhaustive variance-minimizing split over the candidate features.

    Candidate thresholds are midpoints between consecutive distinct sorted
    values. Cost is the summed per-output SSE of the two children; ties go to
    the lowest feature index, then the lowest threshold. Returns
    (feature, threshold) or None when no valid split exists.
    """
    n = Xn.shape[0]
    cols = Xn[:, feats]
    order = np.argsort(cols, axis=0, kind="stable")
    xs = np.take_along_axis(cols, order, axis=0)
    valid = xs[1:] > xs[:-1]
    if min_samples_leaf > 1:
        counts = np.arange(1, n)
        size_ok = (counts >= min_samples_leaf) & (n - counts >= min_samples_leaf)
        valid &= size_ok[:, None]
    if not valid.any():
        return None

    Yc = Yn - Yn.mean(axis=0)  # centering keeps the SSE sums well conditioned
    ys = Yc[order]  # (n, n_feats, m)
    csum = np.cumsum(ys, axis=0)
    csq = np.cumsum(ys * ys, axis=0)
    left_n = np.arange(1, n, dtype=np.float64)[:, None]
    lsum, lsq = csum[:-1], csq[:-1]
    sse_left = lsq.sum(axis=-1) - (lsum**2).sum(axis=-1) / left_n
    rsum = csum[-1] - lsum
    rsq = csq[-1] - lsq
    sse_right = rsq.sum(axis=-1) - (rsum**2).sum(axis=-1) / (n - left_n)
    cost = np.where(valid, sse_left + sse_right, np.inf)

    best = int(np.argmin(cost.T.ravel()))  # feature-major: first hit wins ties
    fi, pos = divmod(best, n - 1)
    lo, hi = xs[pos, fi], xs[pos + 1, fi]
    thr = 0.5 * (lo + hi)
    if thr >= hi:  # adjacent floats: fall back so (x <= thr) splits at pos
        thr = lo
    return int(feats[fi]), float(thr)


def _grow_tree(X, Y, max_depth, min_samples_leaf, n_split_features, rng):
    n, d = X.shape
    feature, threshold, left, right, counts = [], [], [], [], []
    values_by_node = {}

    def alloc():
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        counts.append(0)
        return len(feature) - 1

    stack = [(alloc(), np.arange(n, dtype=np.intp), 0)]
    while stack:
        node, rows, depth = stack.pop()
        counts[node] = rows.size
        Xn, Yn = X[rows], Y[rows]
        split = None
        depth_ok = max_depth is None or depth < max_depth
        if depth_ok and rows.size >= 2 * min_samples_leaf and not _is_constant(Yn):
            if n_split_features < d:
                feats = np.sort(rng.choice(d, size=n_split_features, replace=False))
            else:
                feats = np.arange(d)
            split = _best_split(Xn, Yn, feats, min_samples_leaf)
        if split is None:
            values_by_node[node] = Yn.mean(axis=0)
            continue
        f, thr = split
        feature[node] = f
        threshold[node] = thr
        lid, rid = alloc(), alloc()
        left[node], right[node] = lid, rid
        go_left = Xn[:, f] <= thr
        # left pushed last so it is grown first: per-node RNG draws then
        # follow a fixed preorder
        stack.append((rid, rows[~go_left], depth + 1))
        stack.append((lid, rows[go_left], depth + 1))

    leaf_values = np.vstack(
        [values_by_node[i] for i in range(len(feature)) if feature[i] < 0]
    )
    return Tree(feature, threshold, left, right, counts, leaf_values)


class MultiOutputForest(BaseEstimator, RegressorMixin):
    """Random forest regressor with vector-valued leaves.

    Splits minimize the summed per-output child SSE. Bootstrap resampling and
    per-split feature subsets draw from independent per-tree RNG streams
    derived from (random_state, tree index), so growing the forest never
    perturbs earlier trees.

    Parameters
    ----------
    n_estimators : int
        Number of trees.
    max_depth : int or None
        Depth limit; None means unlimited.
    min_samples_leaf : int
        Minimum rows per leaf considered when splitting.
    max_features : "all", "auto", "sqrt", or int
        Features scanned per split. "all"/"auto" scans every feature,
        "sqrt" scans ceil(sqrt(d)) sampled without replacement.
    bootstrap : bool
        Resample rows with replacement per tree.
    random_state : int or None
        Seed for the per-tree streams; None draws one.
    """

    def __init__(
        self,
        n_estimators=450,
        max_depth=10,
        min_samples_leaf=1,
        max_features="all",
        bootstrap=True,
        random_state=None,
    ):
        self.n_estimators = n_estimators
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf
        self.max_features = max_features
        self.bootstrap = bootstrap
        self.random_state = random_state

    def _n_split_features(self, d):
        mf = self.max_features
        if mf in ("all", "auto", None):
            return d
        if mf == "sqrt":
            return min(d, int(np.ceil(np.sqrt(d))))
        if isinstance(mf, (int, np.integer)) and mf >= 1:
            return min(d, int(mf))
        raise ValueError(f"unsupported max_features: {mf!r}")

    def fit(self, X, Y):
        X = as_float_matrix(X, "X")
        Y = np.asarray(Y, dtype=np.float64)
        self._y_was_1d = Y.ndim == 1
        if self._y_was_1d:
            Y = Y[:, None]
        Y = as_float_matrix(Y, "Y")
        if X.shape[0] != Y.shape[0]:
            raise ValueError(f"X has {X.shape[0]} rows but Y has {Y.shape[0]}")
        n, d = X.shape
        if self.n_estimators < 1:
            raise ValueError(f"n_estimators must be >= 1, got {self.n_estimators}")
        if self.min_samples_leaf < 1:
            raise ValueError(f"min_samples_leaf must be >= 1, got {self.min_samples_leaf}")
        n_split = self._n_split_features(d)

        seed = self.random_state
        if seed is None:
            seed = int(np.random.SeedSequence().generate_state(1)[0])
        self.random_state_ = int(seed)

        self.trees_ = []
        self.bootstrap_indices_ = []
        for t in range(self.n_estimators):
            rng = np.random.default_rng([self.random_state_, t])
            if self.bootstrap:
                rows = rng.integers(0, n, size=n)
            else:
                rows = np.arange(n, dtype=np.intp)
            self.bootstrap_indices_.append(rows)
            self.trees_.append(
                _grow_tree(
                    X[rows], Y[rows], self.max_depth, self.min_samples_leaf,
                    n_split, rng,
                )
            )
        self.n_features_in_ = d
        self.n_outputs_ = Y.shape[1]
        self._build_pack()
        return self

    def _check_fitted(self):
        if not hasattr(self, "trees_"):
            raise NotFittedError("MultiOutputForest instance is not fitted yet")

    def _build_pack(self):
        """Concatenate all trees into global flat arrays for lockstep walks.

        Child pointers are rebased to global node indices; leaves point to
        themselves so a walk step is a fixed point there.
        """
        sizes = np.array([t.n_nodes for t in self.trees_], dtype=np.int64)
        offsets = np.concatenate([[0], np.cumsum(sizes)])
        n_total = int(offsets[-1])
        pf = np.empty(n_total, dtype=np.int32)
        pt = np.empty(n_total, dtype=np.float64)
        pl = np.empty(n_total, dtype=np.int64)
        pr = np.empty(n_total, dtype=np.int64)
        slot = np.zeros(n_total, dtype=np.int64)
        leaf_base = 0
        for t, tree in enumerate(self.trees_):
            o = offsets[t]
            sl = slice(o, o + tree.n_nodes)
            pf[sl] = tree.feature
            pt[sl] = tree.threshold
            local = np.arange(tree.n_nodes, dtype=np.int64)
            is_leaf = tree.feature < 0
            pl[sl] = np.where(is_leaf, local, tree.left) + o
            pr[sl] = np.where(is_leaf, local, tree.right) + o
            slot[sl][is_leaf] = tree.leaf_slot[is_leaf] + leaf_base
            leaf_base += tree.n_leaves
        self._roots = offsets[:-1].copy()
        self._pf, self._pt, self._pl, self._pr = pf, pt, pl, pr
        self._leaf_slot = slot
        self._leaf_values = np.vstack([t.leaf_values for t in self.trees_])

    def _leaves_for(self, X):
        """Global leaf-node index per (tree, row): shape (T, n)."""
        n = X.shape[0]
        node = np.repeat(self._roots[:, None], n, axis=1)
        row = np.arange(n)[None, :]
        f = self._pf[node]
        while (f >= 0).any():
            xv = X[row, np.maximum(f, 0)]
            node = np.where(xv <= self._pt[node], self._pl[node], self._pr[node])
            f = self._pf[node]
        return node

    def predict_per_tree(self, x):
        """One output vector per tree, in tree order: shape (n_estimators, m)."""
        self._check_fitted()
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.n_features_in_,):
            raise ValueError(
                f"expected a feature vector of length {self.n_features_in_}, "
                f"got shape {x.shape}"
            )
        leaves = self._leaves_for(x[None, :])[:, 0]
        return self._leaf_values[self._leaf_slot[leaves]]

    def predict(self, X):
        """Mean of the per-tree predictions."""
        self._check_fitted()
        X = np.asarray(X, dtype=np.float64)
        single = X.ndim == 1
        if single:
            out = self.predict_per_tree(X).mean(axis=0)
            return out[0] if self._y_was_1d else out
        if X.ndim != 2 or X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"expected (n, {self.n_features_in_}) features, got shape {X.shape}"
            )
        chunks = []
        for start in range(0, X.shape[0], _PREDICT_CHUNK):
            block = X[start : start + _PREDICT_CHUNK]
            leaves = self._leaves_for(block)
            chunks.append(self._leaf_values[self._leaf_slot[leaves]].mean(axis=0))
        out = np.vstack(chunks)
        return out[:, 0] if self._y_was_1d else out

    def to_dict(self):
        self._check_fitted()
        return {
            "params": {
                "n_estimators": self.n_estimators,
                "max_depth": self.max_depth,
                "min_samples_leaf": self.min_samples_leaf,
                "max_features": self.max_features,
                "bootstrap": self.bootstrap,
                "random_state": self.random_state_,
            },
            "n_features": self.n_features_in_,
            "n_outputs": self.n_outputs_,
            "y_was_1d": self._y_was_1d,
            "trees": [t.to_dict() for t in self.trees_],
        }

    @classmethod
    def from_dict(cls, d):
        params = dict(d["params"])
        seed = params.pop("random_state")
        model = cls(random_state=seed, **params)
        model.random_state_ = seed
        model.n_features_in_ = int(d["n_features"])
        model.n_outputs_ = int(d["n_outputs"])
        model._y_was_1d = bool(d.get("y_was_1d", False))
        model.trees_ = [Tree.from_dict(td) for td in d["trees"]]
        model.bootstrap_indices_ = None  # training-time metadata, not persisted
        model._build_pack()
        return model
