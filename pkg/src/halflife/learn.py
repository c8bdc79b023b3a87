"""Early-vs-late classification stack.

Three model kinds share one evaluation contract: a channel-average baseline,
L2 logistic regression trained by full-batch gradient descent with a
backtracking line search, and gradient-boosted trees trained on first- and
second-order gradients of the logistic loss with exact greedy splits.

Precision/recall/F1 are class-support-weighted, which makes accuracy equal
weighted recall on every report; that identity is asserted on construction.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .features import FeatureSchema, FeatureVector, default_schema
from .io import atomic_write


class SplitError(ValueError):
    """The requested split cannot be formed."""


class EvaluationError(ValueError):
    """A metric is undefined for the given truth/prediction pair."""


class ModelFormatError(ValueError):
    """A persisted model file is malformed or does not match the features."""


# ---------------------------------------------------------------------------
# Dataset and splitting
# ---------------------------------------------------------------------------


@dataclass
class Dataset:
    """Design matrix plus the row metadata some models need."""

    X: np.ndarray
    y: np.ndarray
    video_ids: list[str]
    schema: FeatureSchema = field(default_factory=default_schema)
    channel_ids: list[str] | None = None
    half_lives: np.ndarray | None = None

    def __post_init__(self) -> None:
        self.X = np.asarray(self.X, dtype=float)
        self.y = np.asarray(self.y, dtype=int)
        if self.X.shape[0] != self.y.shape[0] or self.X.shape[0] != len(self.video_ids):
            raise ValueError("X, y, and video_ids must agree in length")
        if self.X.shape[1] != len(self.schema.names):
            raise ValueError(
                f"matrix has {self.X.shape[1]} columns, schema expects {len(self.schema.names)}"
            )

    @classmethod
    def from_vectors(
        cls,
        vectors: Sequence[FeatureVector],
        schema: FeatureSchema | None = None,
        channel_ids: Mapping[str, str] | None = None,
        half_lives: Mapping[str, float] | None = None,
    ) -> "Dataset":
        labeled = [v for v in vectors if v.label is not None]
        if len(labeled) != len(vectors):
            raise ValueError("all vectors must carry a label to form a training dataset")
        ids = [v.video_id for v in vectors]
        return cls(
            X=np.stack([v.values for v in vectors]) if vectors else np.zeros((0, 25)),
            y=np.array([v.label for v in vectors], dtype=int),
            video_ids=ids,
            schema=schema or default_schema(),
            channel_ids=[channel_ids[i] for i in ids] if channel_ids is not None else None,
            half_lives=np.array([half_lives[i] for i in ids]) if half_lives is not None else None,
        )

    def subset(self, idx: np.ndarray) -> "Dataset":
        return Dataset(
            X=self.X[idx],
            y=self.y[idx],
            video_ids=[self.video_ids[i] for i in idx],
            schema=self.schema,
            channel_ids=[self.channel_ids[i] for i in idx] if self.channel_ids else None,
            half_lives=self.half_lives[idx] if self.half_lives is not None else None,
        )

    def __len__(self) -> int:
        return len(self.video_ids)


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.8
    stratified: bool = True
    seed: int = 42

    def __post_init__(self) -> None:
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must lie in (0, 1)")


def split_indices(y: np.ndarray, spec: SplitSpec) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic stratified row split.

    Per class, the train share is ``round(train_fraction * n_class)`` (ties
    to even), clamped so both sides keep at least one row of each class.
    """
    y = np.asarray(y)
    rng = np.random.default_rng(spec.seed)
    train_parts, test_parts = [], []
    classes = np.unique(y) if spec.stratified else np.array([None])
    for cls in classes:
        pos = np.flatnonzero(y == cls) if cls is not None else np.arange(y.size)
        if pos.size < 2:
            raise SplitError(f"class {cls} has fewer than 2 rows")
        perm = pos[rng.permutation(pos.size)]
        n_train = min(pos.size - 1, max(1, round(spec.train_fraction * pos.size)))
        train_parts.append(perm[:n_train])
        test_parts.append(perm[n_train:])
    train = np.sort(np.concatenate(train_parts))
    test = np.sort(np.concatenate(test_parts))
    return train, test


def split(ds: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset]:
    """Split a dataset into disjoint, exhaustive train/test parts."""
    train_idx, test_idx = split_indices(ds.y, spec)
    return ds.subset(train_idx), ds.subset(test_idx)


# ---------------------------------------------------------------------------
# Channel-average baseline
# ---------------------------------------------------------------------------


@dataclass
class BaselineModel:
    """Predicts a whole channel early or late from its mean train half-life."""

    channel_means: dict[str, float]
    cut: float  # global median of channel means
    majority: int  # fallback class for unseen channels
    global_mean: float


def baseline_fit(train: Dataset) -> BaselineModel:
    if train.channel_ids is None or train.half_lives is None:
        raise ValueError("baseline needs channel ids and half-lives on the training rows")
    sums: dict[str, float] = {}
    counts: dict[str, int] = {}
    for ch, hl in zip(train.channel_ids, train.half_lives):
        sums[ch] = sums.get(ch, 0.0) + float(hl)
        counts[ch] = counts.get(ch, 0) + 1
    means = {ch: sums[ch] / counts[ch] for ch in sums}
    values = np.array(list(means.values()))
    counts_y = np.bincount(train.y, minlength=2)
    majority = int(np.argmax(counts_y))  # ties resolve to class 0
    return BaselineModel(
        channel_means=means,
        cut=float(np.median(values)),
        majority=majority,
        global_mean=float(values.mean()),
    )


def baseline_predict(model: BaselineModel, rows: Dataset) -> tuple[np.ndarray, np.ndarray]:
    """Hard labels plus a ranking score (the channel's mean half-life)."""
    if rows.channel_ids is None:
        raise ValueError("baseline prediction needs channel ids")
    labels = np.empty(len(rows), dtype=int)
    scores = np.empty(len(rows))
    for i, ch in enumerate(rows.channel_ids):
        mean = model.channel_means.get(ch)
        if mean is None:
            labels[i] = model.majority
            scores[i] = model.global_mean
        else:
            labels[i] = 0 if mean <= model.cut else 1
            scores[i] = mean
    return labels, scores


# ---------------------------------------------------------------------------
# L2 logistic regression
# ---------------------------------------------------------------------------


@dataclass
class LogisticModel:
    weights: np.ndarray  # (n_features,)
    intercept: float
    mean: np.ndarray
    std: np.ndarray
    l2_lambda: float
    n_iter: int
    grad_norm: float


LOGISTIC_TOL = 1e-6
LOGISTIC_MAX_ITER = 10_000


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-np.clip(z, -500.0, 500.0)))


def _logistic_loss_grad(
    w: np.ndarray, X1: np.ndarray, y: np.ndarray, lam: float
) -> tuple[float, np.ndarray]:
    z = X1 @ w
    # sum log(1 + exp(-s z)) with s = ±1, numerically stable
    s = 2.0 * y - 1.0
    loss = float(np.sum(np.logaddexp(0.0, -s * z)))
    p = _sigmoid(z)
    grad = X1.T @ (p - y)
    loss += 0.5 * lam * float(np.dot(w[:-1], w[:-1]))  # intercept unpenalized
    grad[:-1] += lam * w[:-1]
    return loss, grad


def logistic_fit(train: Dataset, l2_lambda: float = 1.0) -> LogisticModel:
    """Full-batch gradient descent with Armijo backtracking.

    Features are standardized with training statistics stored in the model;
    iteration stops when the gradient norm drops below 1e-6 or after 10,000
    steps.
    """
    X, y = train.X, train.y.astype(float)
    if not np.all(np.isfinite(X)):
        raise ValueError("non-finite feature values")
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std[std == 0] = 1.0
    Xs = (X - mean) / std
    X1 = np.hstack([Xs, np.ones((Xs.shape[0], 1))])

    w = np.zeros(X1.shape[1])
    loss, grad = _logistic_loss_grad(w, X1, y, l2_lambda)
    n_iter = 0
    step = 1.0
    for n_iter in range(1, LOGISTIC_MAX_ITER + 1):
        gnorm = float(np.linalg.norm(grad))
        if gnorm < LOGISTIC_TOL:
            break
        step = min(step * 2.0, 1.0)
        g2 = gnorm * gnorm
        while step > 1e-14:
            cand = w - step * grad
            cand_loss, cand_grad = _logistic_loss_grad(cand, X1, y, l2_lambda)
            if cand_loss <= loss - 1e-4 * step * g2:
                break
            step *= 0.5
        w, loss, grad = cand, cand_loss, cand_grad
    return LogisticModel(
        weights=w[:-1],
        intercept=float(w[-1]),
        mean=mean,
        std=std,
        l2_lambda=l2_lambda,
        n_iter=n_iter,
        grad_norm=float(np.linalg.norm(grad)),
    )


def logistic_predict(model: LogisticModel, X: np.ndarray) -> np.ndarray:
    Xs = (np.asarray(X, dtype=float) - model.mean) / model.std
    z = Xs @ model.weights + model.intercept
    return 1.0 / (1.0 + np.exp(-z))


# ---------------------------------------------------------------------------
# Gradient-boosted trees
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GbdtParams:
    n_trees: int = 200
    max_depth: int = 4
    learning_rate: float = 0.1
    l2_lambda: float = 1.0
    gamma: float = 0.0

    def to_dict(self) -> dict:
        return {
            "n_trees": self.n_trees,
            "max_depth": self.max_depth,
            "learning_rate": self.learning_rate,
            "l2_lambda": self.l2_lambda,
            "gamma": self.gamma,
        }


@dataclass
class Tree:
    """Flat binary regression tree; feature == -1 marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    weight: np.ndarray
    cover: np.ndarray  # training rows routed through each node

    def predict(self, X: np.ndarray) -> np.ndarray:
        out = np.zeros(X.shape[0])
        stack = [(0, np.arange(X.shape[0]))]
        while stack:
            nid, idx = stack.pop()
            if idx.size == 0:
                continue
            if self.feature[nid] < 0:
                out[idx] = self.weight[nid]
                continue
            goes_left = X[idx, self.feature[nid]] < self.threshold[nid]
            stack.append((int(self.left[nid]), idx[goes_left]))
            stack.append((int(self.right[nid]), idx[~goes_left]))
        return out

    def expected_value(self) -> float:
        """Cover-weighted expectation of the tree output."""
        leaves = self.feature < 0
        root_cover = self.cover[0]
        if root_cover == 0:
            return 0.0
        return float(np.dot(self.weight[leaves], self.cover[leaves]) / root_cover)


@dataclass
class GbdtModel:
    base_score: float  # prior log-odds
    trees: list[Tree]
    params: GbdtParams
    n_features: int
    train_loss: list[float] = field(default_factory=list)

    def __post_init__(self) -> None:
        for t in self.trees:
            used = t.feature[t.feature >= 0]
            if used.size and used.max() >= self.n_features:
                raise ValueError("tree split feature index out of range")
            if not np.all(np.isfinite(t.weight)):
                raise ValueError("non-finite leaf weight")


def _best_split(
    values: np.ndarray, g: np.ndarray, h: np.ndarray, lam: float
) -> tuple[float, float] | None:
    """Best (gain, threshold) over one feature, or None when unsplittable."""
    order = np.argsort(values, kind="stable")
    v = values[order]
    gs = np.cumsum(g[order])
    hs = np.cumsum(h[order])
    gtot, htot = gs[-1], hs[-1]
    cut = np.flatnonzero(v[:-1] < v[1:])
    if cut.size == 0:
        return None
    gl, hl = gs[cut], hs[cut]
    gr, hr = gtot - gl, htot - hl
    gain = 0.5 * (gl**2 / (hl + lam) + gr**2 / (hr + lam) - gtot**2 / (htot + lam))
    # lowest threshold among near-ties wins, so float-noise cannot flip it
    best = int(np.argmax(gain >= gain.max() - 1e-12))
    return float(gain[best]), float((v[cut[best]] + v[cut[best] + 1]) / 2.0)


def _grow_tree(
    X: np.ndarray, g: np.ndarray, h: np.ndarray, params: GbdtParams
) -> Tree:
    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    weight: list[float] = []
    cover: list[int] = []

    def new_node() -> int:
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        weight.append(0.0)
        cover.append(0)
        return len(feature) - 1

    root = new_node()
    stack = [(root, np.arange(X.shape[0]), 0)]
    while stack:
        nid, idx, depth = stack.pop()
        cover[nid] = idx.size
        gsum, hsum = float(g[idx].sum()), float(h[idx].sum())
        weight[nid] = -gsum / (hsum + params.l2_lambda)
        if depth >= params.max_depth or idx.size < 2:
            continue
        best_gain, best_feat, best_thr = 0.0, -1, 0.0
        for f in range(X.shape[1]):
            found = _best_split(X[idx, f], g[idx], h[idx], params.l2_lambda)
            if found is None:
                continue
            gain, thr = found
            if gain - params.gamma > best_gain + 1e-12:
                best_gain, best_feat, best_thr = gain - params.gamma, f, thr
        if best_feat < 0:
            continue
        goes_left = X[idx, best_feat] < best_thr
        lid, rid = new_node(), new_node()
        feature[nid] = best_feat
        threshold[nid] = best_thr
        left[nid], right[nid] = lid, rid
        stack.append((rid, idx[~goes_left], depth + 1))
        stack.append((lid, idx[goes_left], depth + 1))

    return Tree(
        feature=np.array(feature, dtype=int),
        threshold=np.array(threshold),
        left=np.array(left, dtype=int),
        right=np.array(right, dtype=int),
        weight=np.array(weight),
        cover=np.array(cover, dtype=int),
    )


def gbdt_fit(train: Dataset, params: GbdtParams = GbdtParams()) -> GbdtModel:
    """Boosted trees on the binary logistic loss.

    Each round fits one depth-limited tree to the first/second-order
    gradients, with leaf weights -G/(H+lambda) and exact greedy splits over
    sorted feature values (ties broken toward the lower feature index, then
    the lower threshold). Predictions are sigmoid(base + lr * sum of trees).
    """
    X, y = train.X, train.y.astype(float)
    if not np.all((train.y == 0) | (train.y == 1)):
        raise ValueError("gbdt labels must be 0/1")
    p0 = float(np.clip(y.mean(), 1e-12, 1 - 1e-12))
    base = math.log(p0 / (1 - p0))
    model = GbdtModel(base_score=base, trees=[], params=params, n_features=X.shape[1])
    if y.min() == y.max():
        return model  # single-class training data: prior only

    margins = np.full(X.shape[0], base)
    for _ in range(params.n_trees):
        p = 1.0 / (1.0 + np.exp(-margins))
        tree = _grow_tree(X, p - y, p * (1.0 - p), params)
        model.trees.append(tree)
        margins += params.learning_rate * tree.predict(X)
        s = 2.0 * y - 1.0
        model.train_loss.append(float(np.mean(np.logaddexp(0.0, -s * margins))))
    return model


def gbdt_margin(model: GbdtModel, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    out = np.full(X.shape[0], model.base_score)
    for tree in model.trees:
        out += model.params.learning_rate * tree.predict(X)
    return out


def gbdt_predict(model: GbdtModel, X: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-gbdt_margin(model, X)))


def predict_proba(model, X: np.ndarray) -> np.ndarray:
    """Probability predictions for any feature-consuming model kind."""
    if isinstance(model, GbdtModel):
        return gbdt_predict(model, X)
    if isinstance(model, LogisticModel):
        return logistic_predict(model, X)
    raise TypeError(f"cannot predict from {type(model).__name__}")


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EvalReport:
    """Weighted-average metrics, all as percentages."""

    accuracy: float
    precision: float
    recall: float
    f1: float
    roc_auc: float

    def __post_init__(self) -> None:
        if abs(self.accuracy - self.recall) > 1e-9:
            raise AssertionError(
                f"accuracy {self.accuracy} != weighted recall {self.recall}"
            )

    def as_row(self) -> list[float]:
        return [self.accuracy, self.precision, self.recall, self.f1, self.roc_auc]


def roc_auc(y_true: np.ndarray, scores: np.ndarray) -> float:
    """Rank-statistic AUC with midranks for tied scores, as a percentage."""
    y = np.asarray(y_true)
    s = np.asarray(scores, dtype=float)
    n_pos = int((y == 1).sum())
    n_neg = int((y == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise EvaluationError("ROC AUC is undefined with a single class")
    order = np.argsort(s, kind="stable")
    ranks = np.empty(s.size)
    sorted_s = s[order]
    i = 0
    while i < s.size:
        j = i
        while j + 1 < s.size and sorted_s[j + 1] == sorted_s[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    rank_sum = float(ranks[y == 1].sum())
    auc = (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)
    return 100.0 * auc


def evaluate(
    y_true: Sequence[int], y_pred: Sequence[int], scores: Sequence[float]
) -> EvalReport:
    """Accuracy plus support-weighted precision/recall/F1 and ROC AUC."""
    y = np.asarray(y_true, dtype=int)
    p = np.asarray(y_pred, dtype=int)
    s = np.asarray(scores, dtype=float)
    if y.size == 0 or y.size != p.size or y.size != s.size:
        raise EvaluationError("y_true, y_pred, and scores must align and be non-empty")
    accuracy = float((y == p).mean())
    precisions, recalls, f1s, supports = [], [], [], []
    for cls in (0, 1):
        support = int((y == cls).sum())
        tp = int(((y == cls) & (p == cls)).sum())
        pred_pos = int((p == cls).sum())
        prec = tp / pred_pos if pred_pos else 0.0
        rec = tp / support if support else 0.0
        f1 = 2 * prec * rec / (prec + rec) if prec + rec else 0.0
        precisions.append(prec)
        recalls.append(rec)
        f1s.append(f1)
        supports.append(support)
    total = sum(supports)
    w = [sup / total for sup in supports]
    weighted = lambda vals: 100.0 * sum(v * wi for v, wi in zip(vals, w))
    return EvalReport(
        accuracy=100.0 * accuracy,
        precision=weighted(precisions),
        recall=weighted(recalls),
        f1=weighted(f1s),
        roc_auc=roc_auc(y, s),
    )


# ---------------------------------------------------------------------------
# Grid search
# ---------------------------------------------------------------------------

DEFAULT_GBDT_GRID = tuple(
    {"max_depth": d, "learning_rate": lr, "n_trees": n, "l2_lambda": 1.0, "gamma": 0.0}
    for d in (3, 4, 6)
    for lr in (0.05, 0.1, 0.3)
    for n in (100, 200, 400)
)
DEFAULT_LOGISTIC_GRID = tuple({"l2_lambda": lam} for lam in (0.01, 0.1, 1.0, 10.0))


@dataclass(frozen=True)
class GridSearchResult:
    best_params: dict
    results: list[tuple[dict, float]]  # (params, mean weighted F1) per config


def _weighted_f1(y_true: np.ndarray, y_pred: np.ndarray) -> float:
    f1s, supports = [], []
    for cls in (0, 1):
        support = int((y_true == cls).sum())
        tp = int(((y_true == cls) & (y_pred == cls)).sum())
        pred_pos = int((y_pred == cls).sum())
        prec = tp / pred_pos if pred_pos else 0.0
        rec = tp / support if support else 0.0
        f1s.append(2 * prec * rec / (prec + rec) if prec + rec else 0.0)
        supports.append(support)
    total = sum(supports)
    return 100.0 * sum(f * s / total for f, s in zip(f1s, supports))


def stratified_folds(y: np.ndarray, k: int, seed: int) -> list[np.ndarray]:
    """Deterministic stratified k-fold assignment of row indices."""
    rng = np.random.default_rng(seed)
    folds: list[list[int]] = [[] for _ in range(k)]
    for cls in np.unique(y):
        pos = np.flatnonzero(y == cls)
        perm = pos[rng.permutation(pos.size)]
        for i, row in enumerate(perm):
            folds[i % k].append(int(row))
    return [np.sort(np.array(f, dtype=int)) for f in folds]


def _fit_predict(kind: str, train: Dataset, test_X: np.ndarray, params: dict) -> np.ndarray:
    if kind == "gbdt":
        model = gbdt_fit(train, GbdtParams(**params))
        return gbdt_predict(model, test_X)
    if kind == "logistic":
        model = logistic_fit(train, **params)
        return logistic_predict(model, test_X)
    raise ValueError(f"grid search does not support model kind {kind!r}")


def grid_search(
    train: Dataset,
    kind: str,
    grid: Sequence[dict],
    k_folds: int = 5,
    seed: int = 42,
) -> GridSearchResult:
    """Pick the grid entry maximizing mean weighted F1 over stratified folds.

    Ties break toward the earlier entry; a configuration whose folds ever see
    a single-class training side is skipped with a warning.
    """
    if not grid:
        raise ValueError("grid is empty")
    folds = stratified_folds(train.y, k_folds, seed)
    results: list[tuple[dict, float]] = []
    best_score, best_params = -np.inf, None
    for params in grid:
        scores = []
        skipped = False
        for i in range(k_folds):
            val_idx = folds[i]
            tr_idx = np.sort(np.concatenate([folds[j] for j in range(k_folds) if j != i]))
            y_tr, y_val = train.y[tr_idx], train.y[val_idx]
            if np.unique(y_tr).size < 2 or np.unique(y_val).size < 2:
                warnings.warn(
                    f"skipping {params}: fold {i} has a single class",
                    RuntimeWarning,
                    stacklevel=2,
                )
                skipped = True
                break
            proba = _fit_predict(kind, train.subset(tr_idx), train.X[val_idx], params)
            scores.append(_weighted_f1(y_val, (proba >= 0.5).astype(int)))
        if skipped:
            continue
        mean_score = float(np.mean(scores))
        results.append((dict(params), mean_score))
        if mean_score > best_score:
            best_score, best_params = mean_score, dict(params)
    if best_params is None:
        raise ValueError("every grid configuration was skipped")
    return GridSearchResult(best_params=best_params, results=results)


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------


def _tree_to_nested(tree: Tree, nid: int = 0) -> dict:
    if tree.feature[nid] < 0:
        return {"weight": float(tree.weight[nid]), "cover": int(tree.cover[nid])}
    return {
        "feature": int(tree.feature[nid]),
        "threshold": float(tree.threshold[nid]),
        "cover": int(tree.cover[nid]),
        "left": _tree_to_nested(tree, int(tree.left[nid])),
        "right": _tree_to_nested(tree, int(tree.right[nid])),
    }


def _tree_from_nested(node: dict) -> Tree:
    feature, threshold, left, right, weight, cover = [], [], [], [], [], []

    def walk(n: dict) -> int:
        nid = len(feature)
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        weight.append(0.0)
        cover.append(int(n["cover"]))
        if "feature" in n:
            feature[nid] = int(n["feature"])
            threshold[nid] = float(n["threshold"])
            left[nid] = walk(n["left"])
            right[nid] = walk(n["right"])
        else:
            weight[nid] = float(n["weight"])
        return nid

    walk(node)
    return Tree(
        feature=np.array(feature, dtype=int),
        threshold=np.array(threshold),
        left=np.array(left, dtype=int),
        right=np.array(right, dtype=int),
        weight=np.array(weight),
        cover=np.array(cover, dtype=int),
    )


def save_model(
    path: str | Path,
    model: GbdtModel | LogisticModel | BaselineModel,
    schema: FeatureSchema,
    extra: Mapping[str, object] | None = None,
) -> None:
    """Persist any model kind as one self-describing JSON document."""
    doc: dict = {
        "format": "halflife-model-v1",
        "schema_hash": schema.hash(),
        "feature_names": list(schema.names),
    }
    if isinstance(model, GbdtModel):
        doc["kind"] = "gbdt"
        doc["base_score"] = model.base_score
        doc["params"] = model.params.to_dict()
        doc["trees"] = [_tree_to_nested(t) for t in model.trees]
    elif isinstance(model, LogisticModel):
        doc["kind"] = "logistic"
        doc["weights"] = list(model.weights)
        doc["intercept"] = model.intercept
        doc["mean"] = list(model.mean)
        doc["std"] = list(model.std)
        doc["l2_lambda"] = model.l2_lambda
    elif isinstance(model, BaselineModel):
        doc["kind"] = "baseline"
        doc["channel_means"] = model.channel_means
        doc["cut"] = model.cut
        doc["majority"] = model.majority
        doc["global_mean"] = model.global_mean
    else:
        raise TypeError(f"cannot persist {type(model).__name__}")
    if extra:
        doc.update(extra)
    atomic_write(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")


def load_model(
    path: str | Path, schema: FeatureSchema | None = None
) -> tuple[GbdtModel | LogisticModel | BaselineModel, dict]:
    """Load a persisted model, verifying its schema hash when one is given."""
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("format") != "halflife-model-v1":
        raise ModelFormatError(f"{path}: not a model file")
    if schema is not None and doc.get("schema_hash") != schema.hash():
        raise ModelFormatError(
            f"{path}: model was trained against a different feature schema "
            f"({doc.get('schema_hash')} != {schema.hash()})"
        )
    return load_model_from_doc(doc, source=str(path)), doc


def load_model_from_doc(
    doc: Mapping, source: str = "<doc>"
) -> GbdtModel | LogisticModel | BaselineModel:
    path = source
    kind = doc.get("kind")
    if kind == "gbdt":
        params = GbdtParams(**doc["params"])
        model: GbdtModel | LogisticModel | BaselineModel = GbdtModel(
            base_score=float(doc["base_score"]),
            trees=[_tree_from_nested(t) for t in doc["trees"]],
            params=params,
            n_features=len(doc["feature_names"]),
        )
    elif kind == "logistic":
        model = LogisticModel(
            weights=np.array(doc["weights"]),
            intercept=float(doc["intercept"]),
            mean=np.array(doc["mean"]),
            std=np.array(doc["std"]),
            l2_lambda=float(doc["l2_lambda"]),
            n_iter=0,
            grad_norm=0.0,
        )
    elif kind == "baseline":
        model = BaselineModel(
            channel_means={k: float(v) for k, v in doc["channel_means"].items()},
            cut=float(doc["cut"]),
            majority=int(doc["majority"]),
            global_mean=float(doc["global_mean"]),
        )
    else:
        raise ModelFormatError(f"{path}: unknown model kind {kind!r}")
    return model
