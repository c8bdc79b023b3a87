"""Shape-based clustering of z-normalized trajectories.

Distances are shape-based: 1 minus the maximum coefficient-normalized
cross-correlation over all zero-padded shifts of two z-normalized series.
Clustering alternates nearest-centroid assignment with an eigenvector-based
centroid extraction; the number of clusters is picked by mean silhouette.

Trajectories of mixed resolution are resampled onto a common 97-point grid
(one sample per 15 minutes) before normalization.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .core import Resolution, ViewTrajectory

GRID_POINTS = 97  # every 15 minutes over 24 hours
FFT_MIN_LENGTH = 65  # direct summation at or below 64 samples
POWER_ITER_TOL = 1e-10
POWER_ITER_MAX = 1000
LOW_SILHOUETTE_WARN = 0.25
MIN_SHAPE_VARIATION = 0.01  # max pairwise distance below this means one blob


def znorm(x: Sequence[float] | np.ndarray) -> np.ndarray:
    """Rescale to zero mean and unit (population) variance; constants map to zeros."""
    arr = np.asarray(x, dtype=float)
    if arr.size < 2:
        raise ValueError("znorm needs at least 2 samples")
    sd = arr.std()
    if sd == 0:
        return np.zeros_like(arr)
    return (arr - arr.mean()) / sd


def _cc_direct(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Cross-correlation sum over all shifts w = -(n-1)..(n-1).

    Entry k holds ``sum_t x[t] * y[t - w]`` with w = k - (n-1), i.e. y is
    delayed by w with zero padding.
    """
    n = x.size
    out = np.empty(2 * n - 1)
    for k in range(2 * n - 1):
        w = k - (n - 1)
        if w >= 0:
            out[k] = float(np.dot(x[w:], y[: n - w]))
        else:
            out[k] = float(np.dot(x[: n + w], y[-w:]))
    return out


def _fft_size(n: int) -> int:
    size = 1
    while size < 2 * n - 1:
        size *= 2
    return size

def _cc_fft(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """FFT path of :func:`_cc_direct`; identical layout and convention."""
    n = x.size
    size = _fft_size(n)
    r = np.fft.irfft(np.fft.rfft(x, size) * np.conj(np.fft.rfft(y, size)), size)
    return np.concatenate([r[size - (n - 1):], r[:n]])


def sbd(
    x: Sequence[float] | np.ndarray,
    y: Sequence[float] | np.ndarray,
    method: str = "auto",
) -> tuple[float, int]:
    """Shape-based distance in [0, 2] plus the maximizing alignment shift.

    Inputs are z-normalized internally; constant inputs are rejected. A
    positive shift means the second series must be delayed (shifted right)
    by that many slots to best align with the first.
    """
    xa, ya = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    if xa.size != ya.size:
        raise ValueError("sbd requires equal-length sequences")
    if xa.std() == 0 or ya.std() == 0:
        raise ValueError("sbd is undefined for constant sequences")
    xa, ya = znorm(xa), znorm(ya)
    n = xa.size
    if method == "fft" or (method == "auto" and n >= FFT_MIN_LENGTH):
        cc = _cc_fft(xa, ya)
    elif method in ("direct", "auto"):
        cc = _cc_direct(xa, ya)
    else:
        raise ValueError(f"unknown sbd method {method!r}")
    denom = float(np.linalg.norm(xa) * np.linalg.norm(ya))
    ncc = cc / denom
    k = int(np.argmax(ncc))
    dist = max(0.0, 1.0 - float(ncc[k]))
    return dist, k - (n - 1)


def shift_sequence(y: np.ndarray, shift: int) -> np.ndarray:
    """Delay (shift > 0) or advance (shift < 0) a sequence with zero padding."""
    n = y.size
    out = np.zeros_like(y)
    if shift == 0:
        out[:] = y
    elif shift > 0:
        out[shift:] = y[: n - shift]
    else:
        out[: n + shift] = y[-shift:]
    return out


def resample_to_grid(traj: ViewTrajectory, n_points: int = GRID_POINTS) -> np.ndarray:
    """Linearly resample cumulative views onto a common minute grid."""
    grid = np.linspace(0, 1440, n_points)
    minutes = traj.resolution.slot_minutes().astype(float)
    vals = traj.views()
    ok = ~np.isnan(vals)
    if not ok.any():
        raise ValueError(f"{traj.video_id}: no observations to resample")
    return np.interp(grid, minutes[ok], vals[ok])


@dataclass
class ClusterModel:
    """Fitted shape clustering: centroids, assignments, and fit diagnostics."""

    k: int
    centroids: np.ndarray  # (k, length), z-normalized rows (or zeros if empty)
    assignments: dict[str, int]
    labels: np.ndarray
    inertia: float
    n_iter: int
    inertia_history: list[float] = field(default_factory=list)
    n_repairs: int = 0


def shape_extract(members: np.ndarray | Sequence[Sequence[float]]) -> np.ndarray:
    """Centroid of aligned z-normalized members via the leading eigenvector.

    Maximizes the summed squared correlation with the members: the leading
    eigenvector of Q S Q with S the sum of member outer products and Q the
    centering projector. Computed by power iteration; the sign maximizing the
    summed correlation with members is chosen, and the result is z-normalized.
    """
    a = np.atleast_2d(np.asarray(members, dtype=float))
    if a.shape[0] < 1:
        raise ValueError("shape_extract needs at least one member")
    n = a.shape[1]
    s = a.T @ a
    if not np.any(s):
        return np.zeros(n)
    q = np.eye(n) - np.full((n, n), 1.0 / n)
    m = q @ s @ q

    starts = [a.mean(axis=0), a[0]]
    v = None
    for start in starts:
        cand = start - start.mean()
        nrm = np.linalg.norm(cand)
        if nrm < 1e-12:
            continue
        cand = cand / nrm
        prev = cand
        for _ in range(POWER_ITER_MAX):
            nxt = m @ prev
            nrm = np.linalg.norm(nxt)
            if nrm < 1e-14:
                break
            nxt = nxt / nrm
            if min(np.linalg.norm(nxt - prev), np.linalg.norm(nxt + prev)) < POWER_ITER_TOL:
                v = nxt
                break
            prev = nxt
        if v is not None:
            break
    if v is None:
        return np.zeros(n)
    if float(np.sum(a @ v)) < 0:
        v = -v
    return znorm(v)


def _batch_best_corr(
    series_fft: np.ndarray, centroid: np.ndarray, n: int, fft_size: int, series_norms: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Best normalized correlation of every series against one centroid.

    Returns (corr, shift) arrays where shift aligns each *series* to the
    centroid (series delayed by shift).
    """
    c_norm = float(np.linalg.norm(centroid))
    m = series_fft.shape[0]
    if c_norm == 0:
        return np.zeros(m), np.zeros(m, dtype=int)
    c_fft = np.fft.rfft(centroid, fft_size)
    # correlate(centroid, series)[w] = sum_t centroid[t] * series[t - w]
    r = np.fft.irfft(c_fft[None, :] * np.conj(series_fft), fft_size, axis=1)
    cc = np.concatenate([r[:, fft_size - (n - 1):], r[:, :n]], axis=1)
    k = np.argmax(cc, axis=1)
    best = cc[np.arange(m), k] / (series_norms * c_norm)
    return best, (k - (n - 1)).astype(int)


def _kshape_core(
    x: np.ndarray, k: int, max_iter: int, seed: int
) -> tuple[np.ndarray, np.ndarray, float, int, list[float], int]:
    n, length = x.shape
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, k, size=n)
    shifts = np.zeros(n, dtype=int)
    centroids = np.zeros((k, length))
    centroid_set = np.zeros(k, dtype=bool)

    fft_size = _fft_size(length)
    x_fft = np.fft.rfft(x, fft_size, axis=1)
    x_norms = np.linalg.norm(x, axis=1)

    def cluster_cost(c: np.ndarray, idx: np.ndarray) -> float:
        corr, _ = _batch_best_corr(x_fft[idx], c, length, fft_size, x_norms[idx])
        return float(np.sum(1.0 - corr))

    inertia_history: list[float] = []
    prev_inertia = np.inf
    total_repairs = 0
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        # centroid extraction, accepting a new centroid only if it does not
        # increase its cluster's distance sum (keeps inertia monotone)
        for j in range(k):
            idx = np.flatnonzero(labels == j)
            if idx.size == 0:
                continue
            aligned = np.stack([shift_sequence(x[i], int(shifts[i])) for i in idx])
            cand = shape_extract(aligned)
            if not np.any(cand):
                continue
            if centroid_set[j] and cluster_cost(cand, idx) > cluster_cost(centroids[j], idx):
                continue
            centroids[j] = cand
            centroid_set[j] = True

        # assignment to the nearest centroid by shape-based distance
        corr = np.zeros((k, n))
        shift_all = np.zeros((k, n), dtype=int)
        for j in range(k):
            corr[j], shift_all[j] = _batch_best_corr(
                x_fft, centroids[j], length, fft_size, x_norms
            )
        dists = np.maximum(0.0, 1.0 - corr)
        new_labels = np.argmin(dists, axis=0)
        point_dist = dists[new_labels, np.arange(n)]
        new_shifts = shift_all[new_labels, np.arange(n)]

        # repair empty clusters with the point farthest from its centroid
        repaired = 0
        for j in range(k):
            if np.any(new_labels == j):
                continue
            counts = np.bincount(new_labels, minlength=k)
            movable = counts[new_labels] > 1
            if not movable.any():
                continue
            cand_dist = np.where(movable, point_dist, -np.inf)
            far = int(np.argmax(cand_dist))
            new_labels[far] = j
            d, w = 1.0, 0
            if centroid_set[j]:
                d_pair, w = sbd(x[far], centroids[j])
                d = d_pair
            point_dist[far] = d
            new_shifts[far] = w
            repaired += 1
        total_repairs += repaired

        inertia = float(np.sum(point_dist))
        inertia_history.append(inertia)
        if repaired == 0 and inertia > prev_inertia + 1e-9:
            raise RuntimeError(
                f"inertia increased without repair ({prev_inertia} -> {inertia})"
            )
        prev_inertia = inertia

        if np.array_equal(new_labels, labels):
            shifts = new_shifts
            break
        labels = new_labels
        shifts = new_shifts

    return centroids, labels, prev_inertia, n_iter, inertia_history, total_repairs


def _prepare(trajs: Iterable) -> tuple[np.ndarray, list[str]]:
    items = list(trajs)
    if not items:
        raise ValueError("no trajectories to cluster")
    if isinstance(items[0], ViewTrajectory):
        ids = [t.video_id for t in items]
        rows = [resample_to_grid(t) for t in items]
    else:
        ids = [str(i) for i in range(len(items))]
        rows = [np.asarray(r, dtype=float) for r in items]
    lengths = {r.size for r in rows}
    if len(lengths) != 1:
        raise ValueError("all series must share one length")
    x = np.stack([znorm(r) for r in rows])
    flat = np.flatnonzero(np.linalg.norm(x, axis=1) == 0)
    if flat.size:
        raise ValueError(f"constant series cannot be shape-clustered: {[ids[i] for i in flat]}")
    return x, ids


DEFAULT_RESTARTS = 8


def _kshape_best_of(
    x: np.ndarray, k: int, max_iter: int, seed: int, n_init: int
) -> tuple[np.ndarray, np.ndarray, float, int, list[float], int]:
    """Run the iteration from several random assignments, keep the lowest inertia.

    Each restart uses the original random-assignment initialization; restart
    sub-seeds are spawned deterministically from `seed`.
    """
    rng = np.random.default_rng(seed)
    sub_seeds = [int(s) for s in rng.integers(0, 2**31 - 1, size=max(1, n_init))]
    best = None
    for sub in sub_seeds:
        result = _kshape_core(x, k, max_iter, sub)
        if best is None or result[2] < best[2] - 1e-12:
            best = result
    return best


def kshape(
    trajs: Iterable,
    k: int,
    max_iter: int = 100,
    seed: int = 0,
    n_init: int = DEFAULT_RESTARTS,
) -> ClusterModel:
    """Cluster trajectories (or equal-length raw series) into k shape groups."""
    x, ids = _prepare(trajs)
    if k < 1:
        raise ValueError("k must be at least 1")
    if k > x.shape[0]:
        raise ValueError(f"k={k} exceeds the {x.shape[0]} available series")
    centroids, labels, inertia, n_iter, history, repairs = _kshape_best_of(
        x, k, max_iter, seed, n_init
    )
    return ClusterModel(
        k=k,
        centroids=centroids,
        assignments={vid: int(lab) for vid, lab in zip(ids, labels)},
        labels=labels,
        inertia=inertia,
        n_iter=n_iter,
        inertia_history=history,
        n_repairs=repairs,
    )


def pairwise_sbd(x: np.ndarray) -> np.ndarray:
    """Symmetric matrix of shape-based distances between all row pairs."""
    n, length = x.shape
    fft_size = _fft_size(length)
    x_fft = np.fft.rfft(x, fft_size, axis=1)
    norms = np.linalg.norm(x, axis=1)
    d = np.zeros((n, n))
    for i in range(n - 1):
        rest = slice(i + 1, n)
        r = np.fft.irfft(x_fft[i][None, :] * np.conj(x_fft[rest]), fft_size, axis=1)
        cc = np.concatenate([r[:, fft_size - (length - 1):], r[:, :length]], axis=1)
        best = cc.max(axis=1) / (norms[i] * norms[rest])
        d[i, i + 1:] = np.maximum(0.0, 1.0 - best)
    return d + d.T


def silhouette_score(dist: np.ndarray, labels: np.ndarray) -> float:
    """Mean silhouette over all points for a precomputed dissimilarity matrix.

    Singleton clusters contribute a silhouette of 0.
    """
    n = dist.shape[0]
    labels = np.asarray(labels)
    uniq = np.unique(labels)
    scores = np.zeros(n)
    for i in range(n):
        own = labels[i]
        same = (labels == own) & (np.arange(n) != i)
        if not same.any():
            continue
        a = dist[i, same].mean()
        b = min(dist[i, labels == other].mean() for other in uniq if other != own)
        denom = max(a, b)
        scores[i] = 0.0 if denom == 0 else (b - a) / denom
    return float(scores.mean())


@dataclass(frozen=True)
class BestKResult:
    k: int
    scores: dict[int, float]
    models: dict[int, ClusterModel]


def best_k(
    trajs: Iterable,
    k_range: Iterable[int] = range(2, 9),
    seed: int = 0,
    max_iter: int = 100,
    n_init: int = DEFAULT_RESTARTS,
) -> BestKResult:
    """Pick the cluster count maximizing mean silhouette under shape distance."""
    x, ids = _prepare(trajs)
    ks = sorted(set(int(k) for k in k_range))
    if not ks:
        raise ValueError("k_range is empty")
    if max(ks) > x.shape[0]:
        raise ValueError("k_range exceeds the number of series")
    dist = pairwise_sbd(x)
    scores: dict[int, float] = {}
    models: dict[int, ClusterModel] = {}
    for k in ks:
        centroids, labels, inertia, n_iter, history, repairs = _kshape_best_of(
            x, k, max_iter, seed, n_init
        )
        models[k] = ClusterModel(
            k=k,
            centroids=centroids,
            assignments={vid: int(lab) for vid, lab in zip(ids, labels)},
            labels=labels,
            inertia=inertia,
            n_iter=n_iter,
            inertia_history=history,
            n_repairs=repairs,
        )
        scores[k] = silhouette_score(dist, labels) if k > 1 else 0.0
    chosen = max(ks, key=lambda k: (scores[k], -k))
    if scores[chosen] < LOW_SILHOUETTE_WARN or dist.max() < MIN_SHAPE_VARIATION:
        warnings.warn(
            f"best k={chosen} has low mean silhouette support "
            f"(score {scores[chosen]:.3f}, max pairwise distance {dist.max():.4f}); "
            "the data may not contain distinct shape clusters",
            RuntimeWarning,
            stacklevel=2,
        )
    return BestKResult(k=chosen, scores=scores, models=models)


def adjusted_rand_index(labels_a: Sequence, labels_b: Sequence) -> float:
    """Chance-corrected agreement between two partitions of the same items."""
    a = np.asarray(labels_a)
    b = np.asarray(labels_b)
    if a.size != b.size:
        raise ValueError("partitions must label the same items")
    n = a.size
    cats_a, ia = np.unique(a, return_inverse=True)
    cats_b, ib = np.unique(b, return_inverse=True)
    table = np.zeros((cats_a.size, cats_b.size), dtype=np.int64)
    np.add.at(table, (ia, ib), 1)

    def comb2(v):
        return v * (v - 1) // 2

    sum_cells = comb2(table).sum()
    sum_rows = comb2(table.sum(axis=1)).sum()
    sum_cols = comb2(table.sum(axis=0)).sum()
    total = comb2(n)
    expected = sum_rows * sum_cols / total if total else 0.0
    max_index = (sum_rows + sum_cols) / 2.0
    if max_index == expected:
        return 1.0
    return float((sum_cells - expected) / (max_index - expected))
