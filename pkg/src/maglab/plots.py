"""SVG figures for the experiment outputs.

Figures are written with a fixed hash salt and no date stamp so repeated
runs produce the same file.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .digraph import Digraph, strong_components, topological_order  # noqa: E402

plt.rcParams["svg.hashsalt"] = "maglab"


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def log2_heatmap(Z, path, title: str = "log2 Z", labels=None) -> Path:
    """Heatmap of log2 Z; zero entries are left blank."""
    A = np.asarray(Z, dtype=float)
    with np.errstate(divide="ignore"):
        L = np.where(A > 0, np.log2(np.where(A > 0, A, 1.0)), np.nan)
    fig, ax = plt.subplots(figsize=(5, 4.5))
    im = ax.imshow(L, cmap="viridis", interpolation="nearest")
    fig.colorbar(im, ax=ax)
    if labels is not None and len(labels) <= 30:
        ax.set_xticks(range(len(labels)), [str(v) for v in labels], fontsize=6, rotation=90)
        ax.set_yticks(range(len(labels)), [str(v) for v in labels], fontsize=6)
    ax.set_title(title)
    return _save(fig, path)


def kernel_heatmap(K, path, title: str = "kernel basis") -> Path | None:
    """Columns of K as a heatmap; returns None (and draws nothing) for an empty kernel."""
    K = np.asarray(K, dtype=float)
    if K.ndim != 2 or K.shape[1] == 0:
        return None
    fig, ax = plt.subplots(figsize=(3 + 0.3 * K.shape[1], 4.5))
    m = max(np.max(np.abs(K)), 1e-300)
    im = ax.imshow(K, cmap="RdBu_r", vmin=-m, vmax=m, aspect="auto", interpolation="nearest")
    fig.colorbar(im, ax=ax)
    ax.set_xlabel("basis vector")
    ax.set_ylabel("vertex")
    ax.set_title(title)
    return _save(fig, path)


def row_maxima_plot(series: dict, path, title: str = "kernel row maxima") -> Path:
    fig, ax = plt.subplots(figsize=(6, 3))
    for name, y in series.items():
        ax.plot(np.arange(len(y)), y, marker=".", label=name)
    ax.set_xlabel("vertex")
    ax.legend()
    ax.set_title(title)
    return _save(fig, path)


def weighting_histogram(samples, path, bins: int = 60, title: str = "weighting components") -> Path:
    """Relative frequencies of all weighting components pooled over realizations."""
    x = np.asarray(samples, dtype=float).ravel()
    x = x[np.isfinite(x)]
    lo, hi = np.percentile(x, [1, 99]) if x.size else (0.0, 1.0)
    fig, ax = plt.subplots(figsize=(5, 3.5))
    w = np.full(x.size, 1.0 / max(x.size, 1))
    ax.hist(np.clip(x, lo, hi), bins=bins, weights=w)
    ax.set_xlabel("weighting component (1st-99th percentile, clipped)")
    ax.set_ylabel("relative frequency")
    ax.set_title(title)
    return _save(fig, path)


def _layout(D: Digraph) -> dict:
    if strong_components(D).is_dag:
        level = {}
        for v in topological_order(D):
            preds = [u for u in D.predecessors[v] if u != v]
            level[v] = 1 + max((level[u] for u in preds), default=-1)
        cols: dict = {}
        pos = {}
        for v in D.vertices:
            i = cols.setdefault(level[v], 0)
            cols[level[v]] += 1
            pos[v] = (level[v], -i)
        return pos
    n = len(D.vertices)
    return {v: (np.cos(2 * np.pi * i / n), np.sin(2 * np.pi * i / n)) for i, v in enumerate(D.vertices)}


def draw_digraph(D: Digraph, path, values: dict | None = None, title: str = "") -> Path:
    """Simple layered (DAG) or circular drawing; vertex colours follow ``values``."""
    pos = _layout(D)
    fig, ax = plt.subplots(figsize=(6, 4.5))
    for j, k in D.sorted_arcs():
        if j == k:
            continue
        (x0, y0), (x1, y1) = pos[j], pos[k]
        ax.annotate("", xy=(x1, y1), xytext=(x0, y0), arrowprops=dict(arrowstyle="->", lw=0.6, color="0.5"))
    xs = [pos[v][0] for v in D.vertices]
    ys = [pos[v][1] for v in D.vertices]
    if values is None:
        ax.scatter(xs, ys, color="0.85", s=120, zorder=3, edgecolors="k")
    else:
        c = [float(values.get(v, np.nan)) for v in D.vertices]
        sc = ax.scatter(xs, ys, c=c, cmap="coolwarm", s=120, zorder=3, edgecolors="k")
        fig.colorbar(sc, ax=ax)
    if len(D.vertices) <= 40:
        for v in D.vertices:
            ax.text(pos[v][0], pos[v][1], str(v), fontsize=6, ha="center", va="center", zorder=4)
    ax.set_axis_off()
    ax.set_title(title)
    return _save(fig, path)
