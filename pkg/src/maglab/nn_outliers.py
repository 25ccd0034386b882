"""Weighting ensembles on sparse layered DAGs and weighting-based outlier sets.

Each realization keeps the arc weights on a random spanning tree of the
underlying undirected graph, extends them to the closure, and records the
weighting of the resulting similarity matrix.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import log_ndtr

from .cocycle import tree_assignment
from .digraph import Digraph, spanning_structure, topological_order, transitive_closure
from .magnitude import RESIDUAL_TOL, similarity_matrix

AD_LEVELS = (0.15, 0.10, 0.05, 0.01)
AD_CRITICAL = (0.576, 0.656, 0.787, 1.092)
DEFAULT_KEEP_PROB = 0.25


class GenerationError(ValueError):
    pass


class DegenerateSampleError(ValueError):
    pass


@dataclass(frozen=True)
class WeightedDag:
    digraph: Digraph
    weights: Mapping = field(repr=False)

    @property
    def vertices(self) -> tuple:
        return self.digraph.vertices


@dataclass(frozen=True)
class LayeredDag(WeightedDag):
    widths: tuple = ()
    keep_prob: float = 1.0

    def layer_of(self, v) -> int:
        return int(str(v).split(".")[0])


def mlp_dag(widths: Sequence[int], keep_prob: float = DEFAULT_KEEP_PROB, seed: int = 0) -> LayeredDag:
    """Random sub-DAG of the complete layered DAG with uniform(0,1) arc weights.

    Vertices are named ``"layer.i"`` (both 0-based). Each candidate arc is kept
    with probability ``keep_prob``; vertices left without arcs are dropped.
    """
    widths = tuple(int(n) for n in widths)
    if len(widths) < 2 or min(widths) < 1:
        raise ValueError("need at least two layers of positive width")
    if not 0 < keep_prob <= 1:
        raise ValueError("keep_prob must lie in (0, 1]")
    rng = np.random.default_rng(seed)
    candidates = [
        (f"{l}.{i}", f"{l + 1}.{i2}")
        for l in range(len(widths) - 1)
        for i in range(widths[l])
        for i2 in range(widths[l + 1])
    ]
    keep = rng.random(len(candidates)) < keep_prob
    arcs = [a for a, k in zip(candidates, keep) if k]
    if not arcs:
        raise GenerationError("no arcs survived sparsification")
    w = rng.random(len(arcs))
    used = {v for a in arcs for v in a}
    vertices = [f"{l}.{i}" for l in range(len(widths)) for i in range(widths[l]) if f"{l}.{i}" in used]
    return LayeredDag(Digraph(vertices, arcs), dict(zip(arcs, w.tolist())), widths, keep_prob)


def polytree_dag(n: int, seed: int = 0, weight_values: Sequence = (1, 2)) -> WeightedDag:
    """Random binary polytree on n vertices with arc weights uniform on ``weight_values``.

    Vertex i > 0 hangs off a uniformly chosen earlier vertex that still has
    fewer than two children; each edge is oriented by a fair coin.
    """
    rng = np.random.default_rng(seed)
    children = [0] * n
    arcs = []
    for i in range(1, n):
        open_ = [v for v in range(i) if children[v] < 2]
        parent = open_[int(rng.integers(len(open_)))]
        children[parent] += 1
        arcs.append((str(parent), str(i)) if rng.random() < 0.5 else (str(i), str(parent)))
    values = rng.choice(np.asarray(weight_values), size=len(arcs))
    D = Digraph([str(i) for i in range(n)], arcs)
    return WeightedDag(D, {a: v.item() for a, v in zip(arcs, values)})


@dataclass(frozen=True)
class Realization:
    seed: int
    Z: np.ndarray
    w: np.ndarray | None

    @property
    def residual(self) -> float:
        if self.w is None:
            return float("inf")
        return float(np.max(np.abs(self.Z @ self.w - 1.0), initial=0.0))


def realization(D: WeightedDag, seed: int) -> Realization:
    G = D.digraph
    S = spanning_structure(G, seed)
    W = {e: float(D.weights[e]) for e in S.tree_edges}
    E = tree_assignment(transitive_closure(G), S, W)
    Z = similarity_matrix(E).Z
    order = topological_order(G)
    perm = [G.index[v] for v in order]
    U = Z[np.ix_(perm, perm)]
    x = solve_triangular(U, np.ones(len(perm)), lower=False, unit_diagonal=True)
    w = np.empty_like(x)
    w[perm] = x
    if not np.all(np.isfinite(w)) or np.max(np.abs(Z @ w - 1.0), initial=0.0) > RESIDUAL_TOL:
        return Realization(seed, Z, None)
    return Realization(seed, Z, w)


def realize_weighting(D: WeightedDag, seed: int) -> np.ndarray | None:
    """Weighting for one random spanning tree; None flags a failed realization."""
    return realization(D, seed).w


def _default_workers() -> int:
    env = os.environ.get("MAGLAB_THREADS")
    return max(1, int(env)) if env else 1


@dataclass(frozen=True)
class WeightingEnsemble:
    vertices: tuple
    samples: np.ndarray
    seeds: tuple
    residuals: tuple
    failed: tuple = ()

    def summary(self) -> dict:
        X = self.samples
        return {
            "mean": X.mean(axis=0),
            "median": np.median(X, axis=0),
            "std": X.std(axis=0, ddof=1) if len(X) > 1 else np.zeros(X.shape[1]),
        }

    def tendency(self, kind: str = "median") -> dict:
        if kind not in ("mean", "median"):
            raise ValueError("tendency must be 'mean' or 'median'")
        vals = self.summary()[kind]
        return dict(zip(self.vertices, vals.tolist()))

    def column(self, v) -> np.ndarray:
        return self.samples[:, self.vertices.index(v)]


def ensemble(D: WeightedDag, N: int, base_seed: int = 0, workers: int | None = None) -> WeightingEnsemble:
    """N realizations seeded base_seed, base_seed + 1, ...; row order never depends on scheduling."""
    if N < 1:
        raise ValueError("N must be positive")
    seeds = [base_seed + i for i in range(N)]
    workers = workers or _default_workers()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda s: realization(D, s), seeds))
    else:
        results = [realization(D, s) for s in seeds]
    good = [r for r in results if r.w is not None]
    failed = tuple(r.seed for r in results if r.w is None)
    samples = np.array([r.w for r in good]) if good else np.zeros((0, len(D.vertices)))
    return WeightingEnsemble(
        D.vertices, samples, tuple(r.seed for r in good), tuple(r.residual for r in good), failed
    )


@dataclass(frozen=True)
class ADResult:
    statistic: float
    adjusted: float
    passes: dict  # significance level -> bool


def anderson_darling_normal(sample) -> ADResult:
    """Anderson-Darling normality test with estimated mean and variance.

    The statistic is adjusted by (1 + 0.75/n + 2.25/n^2) and compared with
    the critical values 0.576, 0.656, 0.787, 1.092 at 15%, 10%, 5%, 1%.
    """
    x = np.sort(np.asarray(sample, dtype=float))
    n = len(x)
    if n < 8:
        raise ValueError("Anderson-Darling needs at least 8 observations")
    s = x.std(ddof=1)
    if not s > 0 or np.ptp(x) == 0:
        raise DegenerateSampleError("sample has zero variance")
    z = (x - x.mean()) / s
    i = np.arange(1, n + 1)
    S = np.sum((2 * i - 1) * (log_ndtr(z) + log_ndtr(-z[::-1])))
    A2 = -n - S / n
    A2s = A2 * (1 + 0.75 / n + 2.25 / n**2)
    return ADResult(float(A2), float(A2s), {lvl: A2s < cv for lvl, cv in zip(AD_LEVELS, AD_CRITICAL)})


def normality_report(ens: WeightingEnsemble, level: float = 0.01) -> dict:
    """Per-vertex A-D results over non-constant columns, and the pass rate at ``level``."""
    results = {}
    for j, v in enumerate(ens.vertices):
        col = ens.samples[:, j]
        if np.ptp(col) == 0:
            continue
        results[v] = anderson_darling_normal(col)
    passed = sum(r.passes[level] for r in results.values())
    return {
        "results": results,
        "tested": len(results),
        "passed": passed,
        "pass_rate": passed / len(results) if results else float("nan"),
    }


@dataclass(frozen=True)
class OutlierSets:
    t_minus: frozenset
    t_plus: frozenset
    T: frozenset
    X: frozenset
    induced: Digraph
    values: Mapping


def outlier_sets(
    ens: WeightingEnsemble, D: WeightedDag, tendency: str = "median", t_minus: float = 0.14, t_plus: float = 0.99
) -> OutlierSets:
    """Vertices with extreme central weighting, plus vertices that are both a
    predecessor and a successor of such extreme vertices."""
    if not t_minus < t_plus:
        raise ValueError("need t_minus < t_plus")
    vals = ens.tendency(tendency)
    lo = frozenset(v for v, x in vals.items() if x < t_minus)
    hi = frozenset(v for v, x in vals.items() if x > t_plus)
    T = lo | hi
    arcs = D.digraph.arcs
    preds = {i for i, j in arcs if j in T}
    succs = {k for j, k in arcs if j in T}
    X = T | (preds & succs)
    sub = D.digraph.subgraph(X)
    return OutlierSets(lo, hi, T, frozenset(X), sub, {v: vals[v] for v in sub.vertices})


def sign_discordance_rate(D: WeightedDag, values: Mapping) -> float:
    """Fraction of arcs whose endpoints carry weighting values of opposite sign."""
    pairs = [(values[j], values[k]) for j, k in D.digraph.arcs if values[j] != 0 and values[k] != 0]
    if not pairs:
        return float("nan")
    return sum(1 for a, b in pairs if (a > 0) != (b > 0)) / len(pairs)
