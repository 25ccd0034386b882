"""Discrete memoryless channels, their capacities, and networks of channels.

Capacities are in nats throughout. A network assigns a channel to every arc
of a DAG, composing along paths by the Kronecker product; its similarity
matrix has entries exp C(hom(j, k)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import bisect

from .digraph import Digraph, structure_from_edges
from .magnitude import SimilarityMatrix, SizeMap, similarity_matrix
from .matrix_cat import (
    CompositionError,
    KroneckerDivisionError,
    KroneckerEnrichment,
    kronecker_assemble,
    stochastic_check,
)

STOCHASTIC_TOL = 1e-12
NETWORK_RTOL = 1e-10


class ChannelError(ValueError):
    pass


class ConvergenceError(ArithmeticError):
    def __init__(self, message: str, last):
        super().__init__(message)
        self.last = last


class MurogaError(ArithmeticError):
    pass


@dataclass(frozen=True)
class Channel:
    """Row-stochastic matrix W[j, k] = P(output k | input j)."""

    W: np.ndarray

    def __post_init__(self):
        W = np.array(self.W, dtype=float)
        if W.ndim != 2 or W.size == 0:
            raise ChannelError("channel matrix must be a nonempty 2-d array")
        if np.any(W < 0):
            raise ChannelError("channel matrix has negative entries")
        dev = np.max(np.abs(W.sum(axis=1) - 1.0))
        if dev > STOCHASTIC_TOL:
            raise ChannelError(f"rows do not sum to 1 (deviation {dev:.3g})")
        W.setflags(write=False)
        object.__setattr__(self, "W", W)

    @property
    def shape(self) -> tuple[int, int]:
        return self.W.shape

    def __matmul__(self, other: "Channel") -> "Channel":
        # Kronecker product: independent channels used side by side
        return Channel(np.kron(self.W, other.W))

    def to_dict(self) -> dict:
        r, c = self.W.shape
        return {"rows": r, "cols": c, "probs": self.W.ravel().tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "Channel":
        r, c = int(data["rows"]), int(data["cols"])
        probs = np.asarray(data["probs"], dtype=float)
        if probs.size != r * c:
            raise ChannelError(f"expected {r * c} probabilities, got {probs.size}")
        return cls(probs.reshape(r, c))


@dataclass(frozen=True)
class CapacityResult:
    capacity: float
    input_dist: np.ndarray
    method: str
    iterations: int = 0

    @property
    def bits(self) -> float:
        return self.capacity / math.log(2)


def _xlogx_rows(W: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(W > 0, W * np.log(np.where(W > 0, W, 1.0)), 0.0)
    return t.sum(axis=1)


def row_entropies(W) -> np.ndarray:
    """H_j = -sum_k W_jk log W_jk, with 0 log 0 = 0."""
    return -_xlogx_rows(np.asarray(W, dtype=float))


def mutual_information(p, W) -> float:
    p = np.asarray(p, dtype=float)
    W = np.asarray(W, dtype=float)
    q = p @ W
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(W > 0, W / np.where(q > 0, q, 1.0), 1.0)
        terms = np.where(W > 0, W * np.log(ratio), 0.0)
    return float(p @ terms.sum(axis=1))


def _divergences(W: np.ndarray, q: np.ndarray) -> np.ndarray:
    # D(W_j || q) for each input row
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(W > 0, W / np.where(q > 0, q, 1.0), 1.0)
        return np.where(W > 0, W * np.log(ratio), 0.0).sum(axis=1)


def capacity_blahut_arimoto(ch: Channel, tol: float = 1e-9, max_iter: int = 100_000) -> CapacityResult:
    """Alternating maximization of I(X;Y) over input distributions.

    Stops once the standard upper and lower capacity bounds are within
    ``tol``; the lower bound is returned.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    W = ch.W
    r = W.shape[0]
    p = np.full(r, 1.0 / r)
    lower = upper = 0.0
    for it in range(1, max_iter + 1):
        d = _divergences(W, p @ W)
        lower = float(np.log(p @ np.exp(d)))
        upper = float(np.max(d))
        if upper - lower < tol:
            return CapacityResult(max(lower, 0.0), p, "blahut_arimoto", it)
        p = p * np.exp(d - d.max())
        p /= p.sum()
    raise ConvergenceError(
        f"no convergence in {max_iter} iterations (bracket {upper - lower:.3g})",
        CapacityResult(max(lower, 0.0), p, "blahut_arimoto", max_iter),
    )


def _muroga_parts(ch: Channel):
    W = ch.W
    if W.shape[0] != W.shape[1]:
        raise MurogaError("Muroga formula needs a square channel matrix")
    try:
        M = np.linalg.inv(W)
    except np.linalg.LinAlgError:
        raise MurogaError("channel matrix is singular") from None
    H = row_entropies(W)
    MH = M @ H
    e = np.exp(-MH)
    v = e @ M
    return W, M, H, MH, v


def capacity_muroga(ch: Channel) -> CapacityResult:
    """Closed-form capacity of an invertible channel, valid when v > 0."""
    W, M, H, MH, v = _muroga_parts(ch)
    if np.any(v <= 0):
        raise MurogaError(f"formula not valid: v has nonpositive entries {v.tolist()}")
    eC = float(np.sum(np.exp(-MH)))
    C = math.log(eC)
    return CapacityResult(C, v / eC, "muroga")


@dataclass(frozen=True)
class MurogaReport:
    Z: np.ndarray
    v: np.ndarray
    residual: float
    pseudo_distance: np.ndarray
    diagonal_negative: bool


def muroga_coweighting_check(ch: Channel, t: float = 1.0) -> MurogaReport:
    """Z = W Diag(exp(MH)) has coweighting v, and the induced pseudo-distances.

    With Z_jk = exp(-t d_jk) the distances are d_jk = -(log W_jk + (MH)_k) / t.
    """
    W, M, H, MH, v = _muroga_parts(ch)
    Z = W * np.exp(MH)[None, :]
    residual = float(np.max(np.abs(v @ Z - 1.0)))
    with np.errstate(divide="ignore"):
        d = -(np.log(W) + MH[None, :]) / t
    return MurogaReport(Z, v, residual, d, bool(np.all(np.diag(d) < 0)))


def binary_entropy_bits(e: float) -> float:
    if e <= 0 or e >= 1:
        return 0.0
    return -(e * math.log2(e) + (1 - e) * math.log2(1 - e))


def bsc(eps: float) -> Channel:
    if not 0 <= eps <= 1:
        raise ChannelError("crossover probability must lie in [0, 1]")
    return Channel(np.array([[1 - eps, eps], [eps, 1 - eps]]))


def bsc_for_capacity(c: float, xtol: float = 1e-15) -> Channel:
    """Binary symmetric channel with capacity log c (nats), for 1 <= c <= 2."""
    if not 1 <= c <= 2:
        raise ChannelError("a binary symmetric channel has exp-capacity in [1, 2]")
    target = math.log2(c)
    if target >= 1:
        return bsc(0.0)
    if target <= 0:
        return bsc(0.5)
    eps = bisect(lambda e: 1 - binary_entropy_bits(e) - target, 0.0, 0.5, xtol=xtol)
    return bsc(eps)


def exp_capacity(ch: Channel, tol: float = 1e-12) -> float:
    return math.exp(capacity_blahut_arimoto(ch, tol=tol).capacity)


@dataclass(frozen=True)
class ChannelNetwork:
    base: Digraph
    enrichment: KroneckerEnrichment = field(repr=False)
    sizes: SimilarityMatrix

    def hom(self, j, k) -> np.ndarray:
        return self.enrichment[(j, k)]


def _greedy_polytree(D: Digraph) -> list:
    parent = {v: v for v in D.vertices}

    def find(x):
        while parent[x] != x:
            x = parent[x]
        return x

    chosen = []
    for a, b in D.sorted_arcs():
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
            chosen.append((a, b))
    return chosen


def channel_network(D: Digraph, arc_channels: Mapping, tree: Sequence | None = None) -> ChannelNetwork:
    """Network of channels on a DAG, composed by Kronecker products.

    ``arc_channels`` may cover every arc or just a spanning polytree. When it
    covers more, the extra arcs must agree with the assembled composites.
    """
    chans = {a: c if isinstance(c, Channel) else Channel(np.asarray(c)) for a, c in arc_channels.items()}
    for a in chans:
        if a not in D.arcs:
            raise ChannelError(f"{a!r} is not an arc")
    given = Digraph(D.vertices, list(chans))
    tree = list(tree) if tree is not None else _greedy_polytree(given)
    stochastic_check(D, {a: c.W for a, c in chans.items()})
    P = structure_from_edges(D, tree)
    try:
        E = kronecker_assemble(D, P, {a: chans[a].W for a in tree})
    except KroneckerDivisionError as exc:
        raise CompositionError(f"channels do not compose consistently: {exc}") from exc
    for a, c in chans.items():
        H = E[a]
        if H.shape != c.W.shape or np.max(np.abs(H - c.W)) > NETWORK_RTOL * max(1.0, np.max(np.abs(c.W))):
            raise CompositionError(f"channel on {a!r} disagrees with the composite through the polytree")
    Z = similarity_matrix(E, SizeMap.exp_capacity())
    return ChannelNetwork(D, E, Z)


# Factor channels carried by the arcs of the six-vertex example network.
# Each arc carries the Kronecker product of the listed factor channels.
SIX_VERTEX_ARCS = {
    (1, 3): (1, 3),
    (1, 4): (1,),
    (2, 3): (2, 3),
    (2, 4): (2,),
    (3, 5): (4,),
    (3, 6): (5,),
    (4, 5): (3, 4),
    (4, 6): (3, 5),
}

# the variant with the channels out of vertex 2 exchanged, and likewise the channels into vertex 6
SIX_VERTEX_ARCS_SWAPPED = {**SIX_VERTEX_ARCS, (2, 3): (2,), (2, 4): (2, 3), (3, 6): (3, 5), (4, 6): (5,)}


def six_vertex_digraph() -> Digraph:
    return Digraph(range(1, 7), list(SIX_VERTEX_ARCS))


def kron_channels(factors: Sequence[Channel]) -> Channel:
    out = factors[0]
    for f in factors[1:]:
        out = out @ f
    return out


def factor_network(D: Digraph, arc_factors: Mapping, factors: Mapping) -> ChannelNetwork:
    """Network whose arcs carry Kronecker products of named factor channels."""
    chans = {a: kron_channels([factors[i] for i in fs]) for a, fs in arc_factors.items()}
    return channel_network(D, chans)


def six_vertex_network(capacities: Sequence[float]) -> ChannelNetwork:
    """The six-vertex example with factor i a binary symmetric channel of capacity log c_i."""
    if len(capacities) != 5:
        raise ValueError("need five capacities c_1..c_5")
    factors = {i + 1: bsc_for_capacity(c) for i, c in enumerate(capacities)}
    return factor_network(six_vertex_digraph(), SIX_VERTEX_ARCS, factors)


def arc_sizes(arc_factors: Mapping, capacities: Sequence[float]) -> dict:
    """exp-capacity of each arc channel, as products of the factor values c_i."""
    return {a: math.prod(capacities[i - 1] for i in fs) for a, fs in arc_factors.items()}
