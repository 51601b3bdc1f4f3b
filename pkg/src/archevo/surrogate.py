"""Surrogate model: genome featurization and a from-scratch random forest.

The forest is regression CART with bootstrap resampling and per-node
feature subsampling, built on flat arrays through numba kernels so that
refitting a hundred trees stays cheap on a single core.  Everything is
seed-deterministic: the same random_state and training set reproduce the
forest bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin

from .genome import FIELD_DOMAINS, FIELD_NAMES, Genome

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a hard dependency
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(fn):
            return fn

        return wrap


class InsufficientDataError(ValueError):
    """Too few training rows to fit the surrogate."""


_ONE_HOT_FIELDS = ("i2", "i3", "i4", "o1", "o2", "o3", "o4")
_ORDINAL_FIELDS = ("n_c", "n_f", "lr_level")

N_FEATURES = sum(len(FIELD_DOMAINS[f]) for f in _ONE_HOT_FIELDS) + len(_ORDINAL_FIELDS)


class GenomeEncoder(BaseEstimator, TransformerMixin):
    """Fixed featurization: one-hot wiring/operation genes, raw ordinals.

    Stateless; fit is a no-op kept for transformer compatibility.  The
    layout is frozen (24 columns in canonical field order) because the
    surrogate's feature-subsampling arithmetic depends on it.
    """

    def fit(self, X=None, y=None) -> "GenomeEncoder":
        return self

    def transform(self, genomes: Iterable[Genome]) -> np.ndarray:
        rows = []
        for genome in genomes:
            row = np.zeros(N_FEATURES, dtype=np.float64)
            offset = 0
            for name in FIELD_NAMES:
                domain = FIELD_DOMAINS[name]
                value = getattr(genome, name)
                if name in _ONE_HOT_FIELDS:
                    row[offset + domain.index(value)] = 1.0
                    offset += len(domain)
                else:
                    row[offset] = float(value)
                    offset += 1
            rows.append(row)
        if not rows:
            return np.zeros((0, N_FEATURES), dtype=np.float64)
        return np.vstack(rows)

    def get_feature_names_out(self, input_features=None) -> np.ndarray:
        names = []
        for name in FIELD_NAMES:
            if name in _ONE_HOT_FIELDS:
                names.extend(f"{name}={v}" for v in FIELD_DOMAINS[name])
            else:
                names.append(name)
        return np.asarray(names, dtype=object)


@dataclass(frozen=True)
class ForestSettings:
    """Forest hyperparameters as they appear in the config file."""

    n_estimators: int = 100
    min_samples_split: int = 5
    max_features: int | str = "third"

    def __post_init__(self) -> None:
        if self.n_estimators < 1:
            raise ValueError("n_estimators must be positive")
        if self.min_samples_split < 2:
            raise ValueError("min_samples_split must be at least 2")
        if isinstance(self.max_features, str):
            if self.max_features != "third":
                raise ValueError("max_features must be an int or 'third'")
        elif self.max_features < 1:
            raise ValueError("max_features must be positive")


@njit(cache=True)
def _mix64(state):
    s = state + np.uint64(0x9E3779B97F4A7C15)
    z = s
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    z = z ^ (z >> np.uint64(31))
    return s, z


@njit(cache=True)
def _build_tree(X, y, boot, mtry, min_split, seed, feat, thr, left, right, value):
    """Grow one variance-reduction CART into preallocated flat arrays.

    Split choice: among mtry randomly drawn features (without
    replacement), every midpoint between consecutive distinct sorted
    values is scored by sum-of-squares reduction; strictly positive gain
    is required and ties keep the lowest feature index, then the lowest
    threshold.  Nodes stop at size < min_split or a constant target.
    Returns the number of nodes written.
    """
    n = boot.shape[0]
    d = X.shape[1]
    idx = boot.copy()
    cap = feat.shape[0]
    stack_lo = np.empty(cap, np.int64)
    stack_hi = np.empty(cap, np.int64)
    stack_node = np.empty(cap, np.int64)
    featbuf = np.empty(d, np.int64)
    colvals = np.empty(n, np.float64)
    state = seed
    n_nodes = 1
    stack_lo[0] = 0
    stack_hi[0] = n
    stack_node[0] = 0
    top = 1
    while top > 0:
        top -= 1
        lo = stack_lo[top]
        hi = stack_hi[top]
        node = stack_node[top]
        m = hi - lo
        s = 0.0
        y_min = y[idx[lo]]
        y_max = y_min
        for k in range(lo, hi):
            v = y[idx[k]]
            s += v
            if v < y_min:
                y_min = v
            if v > y_max:
                y_max = v
        value[node] = s / m
        feat[node] = -1
        if m < min_split or y_min == y_max:
            continue
        for j in range(d):
            featbuf[j] = j
        for j in range(mtry):
            state, z = _mix64(state)
            r = j + np.int64(z % np.uint64(d - j))
            tmp = featbuf[j]
            featbuf[j] = featbuf[r]
            featbuf[r] = tmp
        featbuf[:mtry].sort()
        best_gain = 0.0
        best_feat = -1
        best_thr = 0.0
        base = s * s / m
        for jj in range(mtry):
            f = featbuf[jj]
            for k in range(m):
                colvals[k] = X[idx[lo + k], f]
            order = np.argsort(colvals[:m], kind="mergesort")
            sl = 0.0
            nl = 0
            for k in range(m - 1):
                sl += y[idx[lo + order[k]]]
                nl += 1
                a = colvals[order[k]]
                b = colvals[order[k + 1]]
                if b > a:
                    sr = s - sl
                    nr = m - nl
                    gain = sl * sl / nl + sr * sr / nr - base
                    if gain > best_gain:
                        best_gain = gain
                        best_feat = f
                        best_thr = 0.5 * (a + b)
        if best_feat < 0:
            continue
        i = lo
        j = hi - 1
        while i <= j:
            if X[idx[i], best_feat] <= best_thr:
                i += 1
            else:
                tmp = idx[i]
                idx[i] = idx[j]
                idx[j] = tmp
                j -= 1
        mid = i
        if mid == lo or mid == hi:
            continue
        feat[node] = best_feat
        thr[node] = best_thr
        left[node] = n_nodes
        right[node] = n_nodes + 1
        stack_lo[top] = lo
        stack_hi[top] = mid
        stack_node[top] = left[node]
        top += 1
        stack_lo[top] = mid
        stack_hi[top] = hi
        stack_node[top] = right[node]
        top += 1
        n_nodes += 2
    return n_nodes


@njit(cache=True)
def _predict_trees(X, feats, thrs, lefts, rights, values, out):
    n_trees = feats.shape[0]
    n = X.shape[0]
    for t in range(n_trees):
        for i in range(n):
            node = 0
            while feats[t, node] >= 0:
                if X[i, feats[t, node]] <= thrs[t, node]:
                    node = lefts[t, node]
                else:
                    node = rights[t, node]
            out[i, t] = values[t, node]


class ForestRegressor(BaseEstimator, RegressorMixin):
    """Deterministic random-forest regressor with a dispersion estimate.

    predict(return_std=True) reports the per-sample standard deviation of
    the individual tree predictions, which the search uses as a model
    disagreement signal.
    """

    def __init__(
        self,
        n_estimators: int = 100,
        min_samples_split: int = 5,
        max_features: int | str = "third",
        random_state: int | None = None,
    ):
        self.n_estimators = n_estimators
        self.min_samples_split = min_samples_split
        self.max_features = max_features
        self.random_state = random_state

    def _resolved_mtry(self, d: int) -> int:
        if self.max_features == "third":
            return max(1, d // 3)
        mtry = int(self.max_features)
        return max(1, min(mtry, d))

    def fit(self, X, y) -> "ForestRegressor":
        X = np.ascontiguousarray(np.asarray(X, dtype=np.float64))
        y = np.ascontiguousarray(np.asarray(y, dtype=np.float64))
        if X.ndim != 2:
            raise ValueError("X must be 2-dimensional")
        if y.shape != (X.shape[0],):
            raise ValueError("y must be one value per row of X")
        n, d = X.shape
        if n < 2:
            raise InsufficientDataError(
                f"forest needs at least 2 training rows, got {n}"
            )
        settings = ForestSettings(
            self.n_estimators, self.min_samples_split, self.max_features
        )
        mtry = self._resolved_mtry(d)
        rng = np.random.default_rng(self.random_state)
        boot = rng.integers(0, n, size=(settings.n_estimators, n), dtype=np.int64)
        tree_seeds = rng.integers(
            0, 2**64, size=settings.n_estimators, dtype=np.uint64
        )
        cap = 4 * n + 8
        n_trees = settings.n_estimators
        self.feature_ = np.full((n_trees, cap), -1, dtype=np.int64)
        self.threshold_ = np.zeros((n_trees, cap), dtype=np.float64)
        self.left_ = np.zeros((n_trees, cap), dtype=np.int64)
        self.right_ = np.zeros((n_trees, cap), dtype=np.int64)
        self.value_ = np.zeros((n_trees, cap), dtype=np.float64)
        self.node_counts_ = np.zeros(n_trees, dtype=np.int64)
        for t in range(n_trees):
            self.node_counts_[t] = _build_tree(
                X,
                y,
                boot[t],
                mtry,
                settings.min_samples_split,
                tree_seeds[t],
                self.feature_[t],
                self.threshold_[t],
                self.left_[t],
                self.right_[t],
                self.value_[t],
            )
        self.n_features_in_ = d
        self.bootstrap_indices_ = boot
        return self

    def _tree_matrix(self, X) -> np.ndarray:
        if not hasattr(self, "feature_"):
            raise RuntimeError("forest is not fitted")
        X = np.ascontiguousarray(np.asarray(X, dtype=np.float64))
        if X.ndim != 2 or X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X must have shape (n, {self.n_features_in_})"
            )
        out = np.empty((X.shape[0], self.feature_.shape[0]), dtype=np.float64)
        _predict_trees(
            X, self.feature_, self.threshold_, self.left_, self.right_, self.value_, out
        )
        return out

    def predict(self, X, return_std: bool = False):
        per_tree = self._tree_matrix(X)
        mean = per_tree.mean(axis=1)
        if not return_std:
            return mean
        return mean, per_tree.std(axis=1)
