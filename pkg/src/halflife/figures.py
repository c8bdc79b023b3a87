"""Report figures rendered next to the delimited outputs.

Every reporting subcommand writes a PNG beside its CSV so results can be
eyeballed without extra tooling. Rendering is deterministic (fixed dpi, no
timestamps) to keep same-seed reruns byte-identical.
"""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .core import QUANTILE_LEVELS, CountryStat
from .learn import EvalReport

DPI = 150

_BIN_COLORS = ["#2c7bb6", "#abd9e9", "#ffffbf", "#fdae61", "#d7191c"]


def _save(fig, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=DPI, bbox_inches="tight")
    plt.close(fig)


def quantile_figure(quantiles: Sequence[float], path: str | Path) -> None:
    fig, ax = plt.subplots(figsize=(5, 3.2))
    labels = [f"{int(p * 100)}%" for p in QUANTILE_LEVELS]
    ax.bar(labels, quantiles, color="#4477aa")
    for x, q in enumerate(quantiles):
        ax.text(x, q, f"{q:g}", ha="center", va="bottom", fontsize=9)
    ax.set_ylabel("half-life (hours)")
    ax.set_title("Half-life quantiles")
    _save(fig, path)


def halflife_hist_figure(hours: Sequence[float], path: str | Path) -> None:
    fig, ax = plt.subplots(figsize=(5.5, 3.2))
    ax.hist(hours, bins=np.arange(0, 25, 1), color="#4477aa", edgecolor="white")
    ax.set_xlabel("half-life (hours)")
    ax.set_ylabel("videos")
    ax.set_title("Half-life distribution")
    _save(fig, path)


def country_figure(stats: Sequence[CountryStat], path: str | Path) -> None:
    rows = [s for s in stats if not s.no_data]
    rows = sorted(rows, key=lambda s: s.mean_half_life)
    fig, ax = plt.subplots(figsize=(6, max(2.5, 0.3 * len(rows) + 1)))
    names = [s.country for s in rows]
    means = [s.mean_half_life for s in rows]
    colors = [_BIN_COLORS[(s.bin or 1) - 1] for s in rows]
    ax.barh(names, means, color=colors)
    ax.set_xlabel("mean half-life (hours)")
    ax.set_title("Per-country mean half-life (shade = 5-bin category)")
    _save(fig, path)


def centroid_figure(centroids: np.ndarray, path: str | Path) -> None:
    fig, ax = plt.subplots(figsize=(6, 3.5))
    minutes = np.linspace(0, 1440, centroids.shape[1])
    for j, c in enumerate(centroids):
        ax.plot(minutes, c, label=f"cluster {j}")
    ax.set_xlabel("minutes since publication")
    ax.set_ylabel("z-normalized views")
    ax.set_title("Cluster centroids")
    ax.legend(fontsize=8)
    _save(fig, path)


def silhouette_figure(scores: Mapping[int, float], path: str | Path) -> None:
    ks = sorted(scores)
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.plot(ks, [scores[k] for k in ks], marker="o", color="#4477aa")
    ax.set_xlabel("k")
    ax.set_ylabel("mean silhouette")
    ax.set_title("Cluster-count selection")
    _save(fig, path)


def eval_figure(reports: Mapping[str, EvalReport], path: str | Path) -> None:
    metrics = ["accuracy", "precision", "recall", "f1", "roc_auc"]
    fig, ax = plt.subplots(figsize=(6.5, 3.5))
    width = 0.8 / max(1, len(reports))
    for i, (name, rep) in enumerate(sorted(reports.items())):
        vals = [getattr(rep, m) for m in metrics]
        ax.bar(np.arange(len(metrics)) + i * width, vals, width=width, label=name)
    ax.set_xticks(np.arange(len(metrics)) + 0.4 - width / 2)
    ax.set_xticklabels(metrics)
    ax.set_ylim(0, 105)
    ax.set_ylabel("percent")
    ax.set_title("Test-set performance")
    ax.legend(fontsize=8)
    _save(fig, path)


def shap_figure(rows: Sequence, path: str | Path, top_n: int = 10) -> None:
    top = list(rows)[:top_n][::-1]
    fig, ax = plt.subplots(figsize=(6, 0.35 * len(top) + 1.2))
    ax.barh([r.feature for r in top], [r.mean_abs_phi for r in top], color="#4477aa")
    ax.set_xlabel("mean |contribution| (log-odds)")
    ax.set_title(f"Top {len(top)} features by attribution")
    _save(fig, path)
