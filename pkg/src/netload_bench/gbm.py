"""Gradient boosting with squared-error loss and CART regression trees.

Each stage fits a tree to the current residuals ``y - F(x)`` (the negative
gradient of the squared error) and the ensemble is updated as
``F <- F + shrinkage * tree(x)``, starting from the mean training target.

Split search follows a fixed order so fits are reproducible: candidate
thresholds are midpoints between consecutive distinct feature values, the
largest variance reduction wins, and ties (gains equal to a relative 1e-10)
go to the lowest feature index and then the lowest threshold. Rows with ``x[feature] <= threshold`` go left.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dataio import SupervisedDataset
from .errors import DimensionMismatch, EmptyInput, EmptyTrainSet, InvalidHyperparameter, SchemaMismatch

FORMAT_VERSION = 1
MIN_SAMPLES_LEAF = 1
TIE_RTOL = 1e-10
LEAF = -1


@dataclass(frozen=True)
class RegressionTree:
    """Binary tree stored as parallel arrays in pre-order.

    ``feature[k] == -1`` marks a leaf; otherwise node ``k`` sends rows with
    ``x[feature[k]] <= threshold[k]`` to ``left[k]`` and the rest to
    ``right[k]``. ``value`` holds leaf predictions.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    max_depth: int

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def depth(self, node: int = 0) -> int:
        if self.feature[node] == LEAF:
            return 0
        return 1 + max(self.depth(self.left[node]), self.depth(self.right[node]))

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(X)
        node = np.zeros(len(X), dtype=np.int64)
        for _ in range(self.depth() + 1):
            feat = self.feature[node]
            internal = feat != LEAF
            if not internal.any():
                break
            rows = np.flatnonzero(internal)
            go_left = X[rows, feat[rows]] <= self.threshold[node[rows]]
            node[rows] = np.where(go_left, self.left[node[rows]], self.right[node[rows]])
        return self.value[node]

    def __eq__(self, other):
        if not isinstance(other, RegressionTree):
            return NotImplemented
        return self.max_depth == other.max_depth and all(
            np.array_equal(getattr(self, k), getattr(other, k))
            for k in ("feature", "threshold", "left", "right", "value")
        )

    __hash__ = None


class _SplitIndex:
    """Per-fit precomputation shared by every tree of an ensemble.

    Features with at most two distinct values are scored from indicator
    sums; the rest keep a presorted row order that is partitioned stably as
    the tree grows.
    """

    def __init__(self, X: np.ndarray):
        self.X = X
        self.XT = np.ascontiguousarray(X.T)
        n, p = X.shape
        lo, hi = X.min(axis=0), X.max(axis=0)
        binary = np.array([np.all((X[:, j] == lo[j]) | (X[:, j] == hi[j])) for j in range(p)], dtype=bool)
        self.binary = np.flatnonzero(binary)
        self.continuous = np.flatnonzero(~binary)
        self.lo, self.hi = lo, hi
        self.indicator = np.ascontiguousarray((X[:, self.binary] > lo[self.binary]).astype(float))
        order = np.argsort(X[:, self.continuous], axis=0, kind="stable").T
        self.order = np.ascontiguousarray(order)
        self.sorted_x = np.take_along_axis(self.XT[self.continuous], self.order, axis=1)


def _midpoint(a: float, b: float) -> float:
    thr = 0.5 * (a + b)
    # midpoint can round onto the upper value when the two are adjacent floats
    return thr if thr < b else a


def _best_split(index: _SplitIndex, r: np.ndarray, rows: np.ndarray, sel: np.ndarray, xs: np.ndarray):
    """Best (gain, feature, threshold) for one node, or None.

    ``rows`` are the node's row ids; ``sel``/``xs`` hold, per continuous
    feature, the node's row ids and values in ascending feature order.
    Gains within ``TIE_RTOL`` of the maximum count as ties.
    """
    m = rows.size
    node_r = r[rows]
    centred = node_r - node_r.mean()
    best = -np.inf

    # SSE reduction of a split: S_L^2/n_L + S_R^2/n_R with S_R = -S_L on centred residuals
    if index.binary.size:
        ind = index.indicator[rows]
        n_hi = ind.sum(axis=0)
        s_hi = ind.T @ centred
        with np.errstate(divide="ignore", invalid="ignore"):
            g_bin = s_hi ** 2 * (1.0 / (m - n_hi) + 1.0 / n_hi)
        ok = (n_hi >= MIN_SAMPLES_LEAF) & (m - n_hi >= MIN_SAMPLES_LEAF)
        g_bin = np.where(ok, g_bin, -np.inf)
        best = max(best, g_bin.max())

    if index.continuous.size:
        left_sum = np.cumsum(r[sel] - node_r.mean(), axis=1)[:, :-1]
        n_left = np.arange(1, m, dtype=float)
        g_cont = left_sum ** 2 * (1.0 / n_left + 1.0 / (m - n_left))
        valid = xs[:, 1:] > xs[:, :-1]
        if MIN_SAMPLES_LEAF > 1:
            valid[:, : MIN_SAMPLES_LEAF - 1] = False
            valid[:, m - MIN_SAMPLES_LEAF:] = False
        g_cont = np.where(valid, g_cont, -np.inf)
        best = max(best, g_cont.max())

    if not best > 0:
        return None
    cutoff = best - TIE_RTOL * best
    choice = None
    if index.binary.size:
        hits = np.flatnonzero(g_bin >= cutoff)
        if hits.size:
            b = hits[0]
            j = int(index.binary[b])
            choice = (g_bin[b], j, _midpoint(index.lo[j], index.hi[j]))
    if index.continuous.size:
        hit_rows = np.flatnonzero((g_cont >= cutoff).any(axis=1))
        if hit_rows.size:
            i = hit_rows[0]
            j = int(index.continuous[i])
            if choice is None or j < choice[1]:
                q = int(np.argmax(g_cont[i] >= cutoff))
                choice = (g_cont[i, q], j, _midpoint(xs[i, q], xs[i, q + 1]))
    return choice


def fit_tree(features: np.ndarray, residuals: np.ndarray, max_depth: int, index: _SplitIndex | None = None) -> RegressionTree:
    """Greedy variance-reduction tree on ``residuals``; leaves hold region means.

    ``index`` lets an ensemble reuse the per-feature sort across stages.
    """
    X = np.asarray(features, dtype=float)
    r = np.asarray(residuals, dtype=float)
    if r.size == 0 or X.shape[0] == 0:
        raise EmptyInput("cannot fit a tree to zero rows")
    if X.ndim != 2 or X.shape[0] != r.shape[0]:
        raise DimensionMismatch("features and residuals must share a row count")
    if max_depth < 0:
        raise InvalidHyperparameter(f"max_depth must be >= 0, got {max_depth}")
    if index is None:
        index = _SplitIndex(X)
    pc = index.continuous.size

    feature, threshold, left, right, value = [], [], [], [], []

    def grow(rows: np.ndarray, sel: np.ndarray, xs: np.ndarray, depth: int) -> int:
        k = len(feature)
        m = rows.size
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(float(r[rows].mean()))
        if depth >= max_depth or m < 2 * MIN_SAMPLES_LEAF:
            return k
        split = _best_split(index, r, rows, sel, xs)
        if split is None:
            return k
        _, j, thr = split
        goes_left = index.XT[j] <= thr
        row_left = goes_left[rows]
        n_left = int(row_left.sum())
        sel_left = goes_left[sel]
        feature[k], threshold[k] = j, float(thr)
        left[k] = grow(rows[row_left], sel[sel_left].reshape(pc, n_left), xs[sel_left].reshape(pc, n_left), depth + 1)
        right[k] = grow(rows[~row_left], sel[~sel_left].reshape(pc, m - n_left), xs[~sel_left].reshape(pc, m - n_left), depth + 1)
        return k

    grow(np.arange(X.shape[0]), index.order, index.sorted_x, 0)
    return RegressionTree(
        np.array(feature, dtype=np.int64),
        np.array(threshold),
        np.array(left, dtype=np.int64),
        np.array(right, dtype=np.int64),
        np.array(value),
        max_depth,
    )


@dataclass(frozen=True)
class GbmConfig:
    estimators: int = 350
    shrinkage: float = 0.1
    max_depth: int = 3
    seed: int = 0

    def __post_init__(self):
        if self.estimators < 1:
            raise InvalidHyperparameter(f"estimators must be >= 1, got {self.estimators}")
        if not 0 < self.shrinkage <= 1:
            raise InvalidHyperparameter(f"shrinkage must be in (0, 1], got {self.shrinkage}")
        if self.max_depth < 0:
            raise InvalidHyperparameter(f"max_depth must be >= 0, got {self.max_depth}")


@dataclass(frozen=True)
class GbmModel:
    init_constant: float
    shrinkage: float
    trees: tuple[RegressionTree, ...] = field(default=())
    n_features: int = -1

    def staged_predict(self, X: np.ndarray):
        """Yield predictions after 0, 1, ..., len(trees) stages."""
        X = _check_features(self, X)
        pred = np.full(len(X), self.init_constant)
        yield pred.copy()
        for tree in self.trees:
            pred = pred + self.shrinkage * tree.predict(X)
            yield pred.copy()

    def truncated(self, k: int) -> "GbmModel":
        return GbmModel(self.init_constant, self.shrinkage, self.trees[:k], self.n_features)


def _check_features(model: GbmModel, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if model.n_features >= 0 and X.shape[1] != model.n_features:
        raise DimensionMismatch(f"model expects {model.n_features} features, got {X.shape[1]}")
    return X


def fit(dataset: SupervisedDataset, estimators: int = 350, shrinkage: float = 0.1, max_depth: int = 3, seed: int = 0) -> GbmModel:
    """Boost ``estimators`` trees on the training partition.

    The procedure draws no random numbers; ``seed`` is accepted so every
    model in a suite is keyed the same way, and does not affect the result.
    """
    GbmConfig(estimators, shrinkage, max_depth, seed)
    return fit_arrays(dataset.X("train"), dataset.y("train"), estimators, shrinkage, max_depth)


def fit_arrays(X: np.ndarray, y: np.ndarray, estimators: int = 350, shrinkage: float = 0.1, max_depth: int = 3) -> GbmModel:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(y) == 0:
        raise EmptyTrainSet("training partition is empty")
    GbmConfig(estimators, shrinkage, max_depth)
    init = float(y.mean())
    pred = np.full(len(y), init)
    index = _SplitIndex(X)
    trees = []
    for _ in range(estimators):
        tree = fit_tree(X, y - pred, max_depth, index)
        pred = pred + shrinkage * tree.predict(X)
        trees.append(tree)
    return GbmModel(init, shrinkage, tuple(trees), X.shape[1])


def predict_batch(model: GbmModel, X: np.ndarray) -> np.ndarray:
    X = _check_features(model, X)
    pred = np.full(len(X), model.init_constant)
    for tree in model.trees:
        pred = pred + model.shrinkage * tree.predict(X)
    return pred


def predict(model: GbmModel, x) -> float:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise DimensionMismatch("predict() takes a single feature vector")
    return float(predict_batch(model, x[None, :])[0])


def predict_series(model: GbmModel, dataset: SupervisedDataset, partition: str = "test") -> np.ndarray:
    X = dataset.X(partition)
    if len(X) == 0:
        return np.empty(0)
    return predict_batch(model, X)


# -- serialisation -----------------------------------------------------------------
#
#   netload-gbm <version>
#   init_constant <value>
#   shrinkage <value>
#   n_features <F>
#   n_trees <I>
#   tree <max_depth> <n_nodes>
#   node_type,feature,threshold,value      (n_nodes lines, pre-order)
#   ...
# node_type is "split" or "leaf"; children of a split follow in pre-order
# (left subtree first), so the structure needs no explicit child indices.

def save_model(model: GbmModel, path) -> None:
    lines = [
        f"netload-gbm {FORMAT_VERSION}",
        f"init_constant {model.init_constant!r}",
        f"shrinkage {model.shrinkage!r}",
        f"n_features {model.n_features}",
        f"n_trees {len(model.trees)}",
    ]
    for tree in model.trees:
        lines.append(f"tree {tree.max_depth} {tree.n_nodes}")
        for k in range(tree.n_nodes):
            kind = "leaf" if tree.feature[k] == LEAF else "split"
            lines.append(f"{kind},{int(tree.feature[k])},{float(tree.threshold[k])!r},{float(tree.value[k])!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_model(path) -> GbmModel:
    lines = iter(Path(path).read_text().splitlines())
    magic = next(lines).split()
    if magic[:1] != ["netload-gbm"] or int(magic[1]) != FORMAT_VERSION:
        raise SchemaMismatch(f"{path}: not a version {FORMAT_VERSION} netload-gbm file")
    header = {}
    for _ in range(4):
        key, val = next(lines).split()
        header[key] = val
    trees = []
    for _ in range(int(header["n_trees"])):
        _, depth, count = next(lines).split()
        rows = [next(lines).split(",") for _ in range(int(count))]
        trees.append(_tree_from_preorder(rows, int(depth)))
    return GbmModel(float(header["init_constant"]), float(header["shrinkage"]), tuple(trees), int(header["n_features"]))


def _tree_from_preorder(rows, max_depth: int) -> RegressionTree:
    n = len(rows)
    feature = np.array([int(r[1]) for r in rows], dtype=np.int64)
    threshold = np.array([float(r[2]) for r in rows])
    value = np.array([float(r[3]) for r in rows])
    left = np.full(n, -1, dtype=np.int64)
    right = np.full(n, -1, dtype=np.int64)

    def link(k: int) -> int:
        """Wire node k's children; return the index after its subtree."""
        if rows[k][0] == "leaf":
            return k + 1
        left[k] = k + 1
        nxt = link(k + 1)
        right[k] = nxt
        return link(nxt)

    link(0)
    return RegressionTree(feature, threshold, left, right, value, max_depth)
