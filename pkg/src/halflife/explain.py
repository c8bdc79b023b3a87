"""Exact per-row attributions for the boosted-tree model.

Shapley values are computed by the path-dependent polynomial-time tree
traversal, using the per-node training-row covers recorded at fit time to
weight the branches a feature subset leaves undetermined. Attributions are
on the margin (log-odds) scale; the base value plus the per-feature
contributions reconstructs the model margin exactly.

Permutation importance is provided as an independent cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .features import FeatureVector
from .learn import (
    Dataset,
    EvaluationError,
    GbdtModel,
    LogisticModel,
    Tree,
    _weighted_f1,
    predict_proba,
    roc_auc,
)

LOCAL_ACCURACY_TOL = 1e-6


@dataclass(frozen=True)
class Attribution:
    """Per-feature margin contributions for one row."""

    video_id: str
    base_value: float
    phi: np.ndarray


def _margin_single(model: GbdtModel, x: np.ndarray) -> float:
    total = model.base_score
    for tree in model.trees:
        nid = 0
        while tree.feature[nid] >= 0:
            nid = int(
                tree.left[nid] if x[tree.feature[nid]] < tree.threshold[nid] else tree.right[nid]
            )
        total += model.params.learning_rate * float(tree.weight[nid])
    return total


def _extend(ds, zs, os, ws, pz, po, pi) -> None:
    l = len(ds)
    ds.append(pi)
    zs.append(pz)
    os.append(po)
    ws.append(1.0 if l == 0 else 0.0)
    for i in range(l - 1, -1, -1):
        ws[i + 1] += po * ws[i] * (i + 1) / (l + 1)
        ws[i] = pz * ws[i] * (l - i) / (l + 1)


def _unwind(ds, zs, os, ws, k) -> None:
    d = len(ds) - 1
    one, zero = os[k], zs[k]
    n = ws[d]
    for i in range(d - 1, -1, -1):
        if one != 0:
            tmp = ws[i]
            ws[i] = n * (d + 1) / ((i + 1) * one)
            n = tmp - ws[i] * zero * (d - i) / (d + 1)
        else:
            ws[i] = ws[i] * (d + 1) / (zero * (d - i))
    del ds[k], zs[k], os[k]
    ws.pop()


def _unwound_sum(zs, os, ws, k) -> float:
    d = len(ws) - 1
    one, zero = os[k], zs[k]
    total = 0.0
    if one != 0:
        n = ws[d]
        for i in range(d - 1, -1, -1):
            tmp = n / ((i + 1) * one)
            total += tmp
            n = ws[i] - tmp * zero * (d - i)
    else:
        for i in range(d - 1, -1, -1):
            total += ws[i] / (zero * (d - i))
    return total * (d + 1)


def _shap_tree(tree: Tree, x: np.ndarray, phi: np.ndarray, scale: float) -> None:
    feat, thr = tree.feature, tree.threshold
    left, right = tree.left, tree.right
    weight, cover = tree.weight, tree.cover

    def recurse(j: int, ds, zs, os, ws, pz: float, po: float, pi: int) -> None:
        ds, zs, os, ws = list(ds), list(zs), list(os), list(ws)
        _extend(ds, zs, os, ws, pz, po, pi)
        if feat[j] < 0:
            v = float(weight[j]) * scale
            for i in range(1, len(ds)):
                w = _unwound_sum(zs, os, ws, i)
                phi[ds[i]] += w * (os[i] - zs[i]) * v
            return
        f = int(feat[j])
        if x[f] < thr[j]:
            hot, cold = int(left[j]), int(right[j])
        else:
            hot, cold = int(right[j]), int(left[j])
        iz, io = 1.0, 1.0
        k = -1
        for idx in range(1, len(ds)):
            if ds[idx] == f:
                k = idx
                break
        if k >= 0:
            iz, io = zs[k], os[k]
            _unwind(ds, zs, os, ws, k)
        rj = float(cover[j])
        recurse(hot, ds, zs, os, ws, iz * cover[hot] / rj, io, f)
        recurse(cold, ds, zs, os, ws, iz * cover[cold] / rj, 0.0, f)

    recurse(0, [], [], [], [], 1.0, 1.0, -1)


def expected_margin(model: GbdtModel) -> float:
    """Cover-weighted expected model margin (the attribution base value)."""
    return model.base_score + model.params.learning_rate * sum(
        t.expected_value() for t in model.trees
    )


def tree_shap(model: GbdtModel, row: FeatureVector | np.ndarray) -> Attribution:
    """Exact path-dependent Shapley attribution of one row's margin."""
    if isinstance(row, FeatureVector):
        video_id, x = row.video_id, np.asarray(row.values, dtype=float)
    else:
        video_id, x = "", np.asarray(row, dtype=float)
    if x.shape != (model.n_features,):
        raise ValueError(
            f"row has {x.shape} values but the model expects {model.n_features} features"
        )
    phi = np.zeros(model.n_features)
    for tree in model.trees:
        _shap_tree(tree, x, phi, model.params.learning_rate)
    base = expected_margin(model)
    margin = _margin_single(model, x)
    err = abs(base + phi.sum() - margin)
    if err > LOCAL_ACCURACY_TOL:
        raise AssertionError(f"local accuracy violated: |{err}| > {LOCAL_ACCURACY_TOL}")
    return Attribution(video_id=video_id, base_value=base, phi=phi)


@dataclass(frozen=True)
class SummaryRow:
    feature: str
    mean_abs_phi: float
    rank: int


def shap_summary(
    attributions: Sequence[Attribution], feature_names: Sequence[str]
) -> list[SummaryRow]:
    """Full mean-|phi| ranking, descending, ties broken by feature index."""
    if not attributions:
        raise ValueError("no attributions to summarize")
    mat = np.stack([a.phi for a in attributions])
    means = np.abs(mat).mean(axis=0)
    order = sorted(range(len(feature_names)), key=lambda i: (-means[i], i))
    return [
        SummaryRow(feature=feature_names[i], mean_abs_phi=float(means[i]), rank=pos + 1)
        for pos, i in enumerate(order)
    ]


@dataclass(frozen=True)
class FeatureImportance:
    feature: str
    mean_drop: float
    std_drop: float


_METRICS: dict[str, Callable[[np.ndarray, np.ndarray, np.ndarray], float]] = {
    "f1_weighted": lambda y, pred, proba: _weighted_f1(y, pred),
    "accuracy": lambda y, pred, proba: 100.0 * float((y == pred).mean()),
    "roc_auc": lambda y, pred, proba: roc_auc(y, proba),
}


def permutation_importance(
    model: GbdtModel | LogisticModel,
    test: Dataset,
    metric: str = "f1_weighted",
    n_repeats: int = 10,
    seed: int = 0,
) -> list[FeatureImportance]:
    """Mean metric drop (over shuffles of one column at a time) per feature."""
    if metric not in _METRICS:
        raise ValueError(f"unknown metric {metric!r}; choose from {sorted(_METRICS)}")
    score_fn = _METRICS[metric]
    rng = np.random.default_rng(seed)
    X, y = test.X, test.y

    def score(mat: np.ndarray) -> float:
        proba = predict_proba(model, mat)
        return score_fn(y, (proba >= 0.5).astype(int), proba)

    base = score(X)
    out: list[FeatureImportance] = []
    for f, name in enumerate(test.schema.names):
        drops = []
        for _ in range(n_repeats):
            shuffled = X.copy()
            shuffled[:, f] = shuffled[rng.permutation(X.shape[0]), f]
            drops.append(base - score(shuffled))
        drops_arr = np.array(drops)
        out.append(
            FeatureImportance(
                feature=name,
                mean_drop=float(drops_arr.mean()),
                std_drop=float(drops_arr.std()),
            )
        )
    return out
