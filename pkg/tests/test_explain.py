"""Tree attribution correctness against brute-force Shapley enumeration."""

import math
from itertools import combinations

import numpy as np
import pytest
from conftest import build_synth_dataset

from halflife.explain import (
    Attribution,
    expected_margin,
    permutation_importance,
    shap_summary,
    tree_shap,
)
from halflife.features import FEATURE_NAMES
from halflife.learn import Dataset, GbdtModel, GbdtParams, Tree, gbdt_fit, gbdt_margin, split, SplitSpec

PLANTED = {"channel_video_count", "length", "country_avg_half_life"}


# ---------------------------------------------------------------------------
# brute-force oracle
# ---------------------------------------------------------------------------


def cover_expectation(tree: Tree, x, known, node=0):
    """Conditional expectation of the tree output given the known features."""
    if tree.feature[node] < 0:
        return float(tree.weight[node])
    f = int(tree.feature[node])
    left, right = int(tree.left[node]), int(tree.right[node])
    if f in known:
        child = left if x[f] < tree.threshold[node] else right
        return cover_expectation(tree, x, known, child)
    wl = tree.cover[left] / tree.cover[node]
    wr = tree.cover[right] / tree.cover[node]
    return wl * cover_expectation(tree, x, known, left) + wr * cover_expectation(
        tree, x, known, right
    )


def brute_force_shap(tree: Tree, x, n_features):
    """Exact Shapley values by enumerating subsets of the tree's features."""
    used = sorted(set(int(f) for f in tree.feature if f >= 0))
    phi = np.zeros(n_features)
    m = len(used)
    for i in used:
        others = [f for f in used if f != i]
        for r in range(m):
            for subset in combinations(others, r):
                weight = math.factorial(r) * math.factorial(m - r - 1) / math.factorial(m)
                gain = cover_expectation(tree, x, set(subset) | {i}) - cover_expectation(
                    tree, x, set(subset)
                )
                phi[i] += weight * gain
    return phi


def random_tree(rng, n_features=4, max_depth=2):
    """A structurally valid random tree with consistent integer covers."""
    feature, threshold, left, right, weight, cover = [], [], [], [], [], []

    def build(depth, cov):
        nid = len(feature)
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        weight.append(0.0)
        cover.append(int(cov))
        if depth == 0 or cov < 2 or rng.random() < 0.2:
            weight[nid] = float(rng.normal())
            return nid
        feature[nid] = int(rng.integers(0, n_features))
        threshold[nid] = float(rng.normal())
        cov_left = int(rng.integers(1, cov))
        left[nid] = build(depth - 1, cov_left)
        right[nid] = build(depth - 1, cov - cov_left)
        return nid

    build(max_depth, int(rng.integers(20, 120)))
    return Tree(
        feature=np.array(feature, dtype=int),
        threshold=np.array(threshold),
        left=np.array(left, dtype=int),
        right=np.array(right, dtype=int),
        weight=np.array(weight),
        cover=np.array(cover, dtype=int),
    )


def wrap_tree(tree, n_features=4):
    return GbdtModel(
        base_score=0.0,
        trees=[tree],
        params=GbdtParams(n_trees=1, learning_rate=1.0),
        n_features=n_features,
    )


def test_tree_shap_matches_brute_force_on_random_trees():
    rng = np.random.default_rng(42)
    for _ in range(20):
        tree = random_tree(rng)
        model = wrap_tree(tree)
        for _ in range(5):
            x = rng.normal(size=4)
            attr = tree_shap(model, x)
            oracle = brute_force_shap(tree, x, 4)
            assert attr.phi == pytest.approx(oracle, abs=1e-9)


def test_tree_shap_depth_three_also_exact():
    rng = np.random.default_rng(7)
    for _ in range(5):
        tree = random_tree(rng, n_features=5, max_depth=3)
        model = wrap_tree(tree, n_features=5)
        x = rng.normal(size=5)
        assert tree_shap(model, x).phi == pytest.approx(
            brute_force_shap(tree, x, 5), abs=1e-9
        )


def test_dummy_feature_gets_zero_phi():
    rng = np.random.default_rng(3)
    for _ in range(10):
        tree = random_tree(rng, n_features=3)
        model = wrap_tree(tree, n_features=6)  # features 3..5 never used
        x = rng.normal(size=6)
        attr = tree_shap(model, x)
        assert attr.phi[3:] == pytest.approx(np.zeros(3), abs=0.0)


def test_local_accuracy_on_fitted_ensemble(synth_dataset_small):
    ds, _ = synth_dataset_small
    train, test = split(ds, SplitSpec(seed=5))
    model = gbdt_fit(train, GbdtParams(n_trees=50, max_depth=3))
    margins = gbdt_margin(model, test.X)
    for i in range(len(test)):
        attr = tree_shap(model, test.X[i])
        assert abs(attr.base_value + attr.phi.sum() - margins[i]) <= 1e-6


def test_symmetry_of_interchangeable_features():
    # hand-built: feature 0 and feature 1 split identically at 0 with equal
    # covers; on an input activating both, their contributions must match
    tree = Tree(
        feature=np.array([0, 1, 1, -1, -1, -1, -1]),
        threshold=np.array([0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]),
        left=np.array([1, 3, 5, -1, -1, -1, -1]),
        right=np.array([2, 4, 6, -1, -1, -1, -1]),
        weight=np.array([0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 4.0]),
        cover=np.array([40, 20, 20, 10, 10, 10, 10]),
    )
    model = wrap_tree(tree, n_features=2)
    attr = tree_shap(model, np.array([1.0, 1.0]))
    assert attr.phi[0] == pytest.approx(attr.phi[1], abs=1e-9)
    oracle = brute_force_shap(tree, np.array([1.0, 1.0]), 2)
    assert attr.phi == pytest.approx(oracle, abs=1e-9)


def test_expected_margin_matches_empty_coalition():
    rng = np.random.default_rng(11)
    tree = random_tree(rng)
    model = wrap_tree(tree)
    x = rng.normal(size=4)
    assert expected_margin(model) == pytest.approx(
        cover_expectation(tree, x, set()), abs=1e-12
    )


def test_tree_shap_row_length_mismatch_errors():
    rng = np.random.default_rng(1)
    model = wrap_tree(random_tree(rng))
    with pytest.raises(ValueError):
        tree_shap(model, np.zeros(7))


# ---------------------------------------------------------------------------
# summary and permutation importance
# ---------------------------------------------------------------------------


def test_shap_summary_ordering_and_ties():
    attrs = [
        Attribution(video_id="a", base_value=0.0, phi=np.array([1.0, -3.0, 0.0, 0.0])),
        Attribution(video_id="b", base_value=0.0, phi=np.array([-1.0, 3.0, 0.0, 0.0])),
    ]
    rows = shap_summary(attrs, ["f0", "f1", "f2", "f3"])
    assert [r.feature for r in rows] == ["f1", "f0", "f2", "f3"]  # tie f2/f3 by index
    assert [r.rank for r in rows] == [1, 2, 3, 4]
    assert rows[0].mean_abs_phi == pytest.approx(3.0)


def test_shap_summary_all_zero_phis():
    attrs = [Attribution(video_id="a", base_value=0.0, phi=np.zeros(4))]
    rows = shap_summary(attrs, ["f0", "f1", "f2", "f3"])
    assert [r.feature for r in rows] == ["f0", "f1", "f2", "f3"]


def fit_planted(synth_dataset_small):
    ds, _ = synth_dataset_small
    train, test = split(ds, SplitSpec(seed=5))
    model = gbdt_fit(train, GbdtParams(n_trees=80, max_depth=4))
    return model, test


def test_planted_features_rank_top3_by_mean_phi(synth_dataset_small):
    model, test = fit_planted(synth_dataset_small)
    attrs = [tree_shap(model, test.X[i]) for i in range(len(test))]
    rows = shap_summary(attrs, FEATURE_NAMES)
    assert {r.feature for r in rows[:3]} == PLANTED


def test_permutation_importance_planted_strongest(synth_dataset_small):
    # the strict top-3-in-4-of-5-seeds claim runs at full scale in the
    # acceptance suite; at this fixture size assert the planted features
    # dominate without demanding an exact podium
    model, test = fit_planted(synth_dataset_small)
    imp = permutation_importance(model, test, n_repeats=5, seed=0)
    by_drop = sorted(imp, key=lambda r: -r.mean_drop)
    assert by_drop[0].feature in PLANTED
    assert PLANTED <= {r.feature for r in by_drop[:5]}


def test_permutation_importance_uninformative_near_zero(synth_dataset_small):
    model, test = fit_planted(synth_dataset_small)
    imp = {r.feature: r for r in permutation_importance(model, test, n_repeats=10, seed=1)}
    row = imp["subjectivity"]  # title-derived, independent of the target
    assert abs(row.mean_drop) < max(2 * row.std_drop, 1.0)


def test_permutation_importance_deterministic(synth_dataset_small):
    model, test = fit_planted(synth_dataset_small)
    a = permutation_importance(model, test, n_repeats=3, seed=9)
    b = permutation_importance(model, test, n_repeats=3, seed=9)
    assert [(r.feature, r.mean_drop, r.std_drop) for r in a] == [
        (r.feature, r.mean_drop, r.std_drop) for r in b
    ]


def spearman(a, b):
    ra = np.argsort(np.argsort(a))
    rb = np.argsort(np.argsort(b))
    return np.corrcoef(ra, rb)[0, 1]


def test_rank_agreement_between_shap_and_permutation(synth_dataset_small):
    model, test = fit_planted(synth_dataset_small)
    attrs = [tree_shap(model, test.X[i]) for i in range(len(test))]
    mean_phi = np.abs(np.stack([a.phi for a in attrs])).mean(axis=0)
    imp = permutation_importance(model, test, n_repeats=5, seed=2)
    drops = np.array([r.mean_drop for r in imp])
    assert spearman(mean_phi, drops) >= 0.6
