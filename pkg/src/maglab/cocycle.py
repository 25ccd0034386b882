"""Scalar solutions of the multiplicative system Z_jk Z_kl = Z_jl on a closure category.

Values are exact :class:`~fractions.Fraction` whenever the inputs are; the
same code paths accept floats for the experiment modules, in which case the
consistency checks take a relative tolerance.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from . import exact
from .digraph import (
    ClosureCategory,
    Digraph,
    SpanningStructure,
    nondegenerate_paths,
    return_paths,
    strong_components,
    transitive_closure,
    tree_path,
)


class CocycleError(ValueError):
    """The multiplicative system is violated."""


class DegeneracyError(CocycleError):
    """A zero generator was supplied where a nondegenerate one is required."""


class CharacterizationError(CocycleError):
    """No vertex potentials reproduce the given values."""


class IntegralityError(CocycleError):
    def __init__(self, arcs):
        self.arcs = list(arcs)
        super().__init__(f"values on {self.arcs[:5]!r} are not positive integers")


@dataclass(frozen=True)
class PathIncidence:
    rows: tuple
    cols: tuple
    matrix: tuple = field(repr=False)

    @property
    def trivial(self) -> bool:
        return not self.rows

    def as_array(self) -> np.ndarray:
        return np.array(self.matrix, dtype=int).reshape(len(self.rows), len(self.cols))


def build_incidence(C: ClosureCategory, with_returns: bool = False) -> PathIncidence:
    """Incidence matrix of length-two paths against non-loop closure arcs.

    Row (j,k,l) has +1 at (j,k) and (k,l) and -1 at (j,l). With
    ``with_returns`` the rows (j,k,j) for two-way pairs are appended; those
    carry +1 at (j,k) and (k,j) only, since the loop value is pinned to 1.
    """
    cols = C.nonloop_arcs
    col = {a: i for i, a in enumerate(cols)}
    rows = list(nondegenerate_paths(C))
    if with_returns:
        rows += [t for t in return_paths(C) if C.base.arc_key(t[:2]) < C.base.arc_key(t[1:])]
    mat = []
    for j, k, l in rows:
        r = [0] * len(cols)
        r[col[(j, k)]] += 1
        r[col[(k, l)]] += 1
        if j != l:
            r[col[(j, l)]] -= 1
        mat.append(tuple(r))
    return PathIncidence(tuple(rows), cols, tuple(mat))


@dataclass(frozen=True)
class KernelBasis:
    cols: tuple
    vectors: tuple
    rows: tuple = ()  # the composable triples the basis solves

    @property
    def dimension(self) -> int:
        return len(self.vectors)


def kernel_basis(M: PathIncidence) -> KernelBasis:
    ncols = len(M.cols)
    if M.trivial:
        vecs = [[int(i == f) for i in range(ncols)] for f in range(ncols)]
    else:
        vecs = exact.nullspace(M.matrix, ncols)
    return KernelBasis(M.cols, tuple(tuple(v) for v in vecs), M.rows)


@dataclass(frozen=True)
class ScalarEnrichment:
    """Values on the non-loop closure arcs; loops are implicitly 1."""

    closure: ClosureCategory
    values: Mapping

    def __getitem__(self, arc):
        j, k = arc
        if j == k:
            return Fraction(1) if self.exact else 1.0
        return self.values[(j, k)]

    @property
    def exact(self) -> bool:
        return all(isinstance(v, (Fraction, int)) for v in self.values.values())

    def items(self):
        return ((a, self.values[a]) for a in self.closure.nonloop_arcs)

    @classmethod
    def from_matrix(cls, closure: ClosureCategory, Z) -> "ScalarEnrichment":
        idx = closure.base.index
        vals = {(j, k): Z[idx[j]][idx[k]] for j, k in closure.nonloop_arcs}
        return cls(closure, vals)

    def to_dict(self) -> dict:
        out = []
        for (j, k), v in self.items():
            if isinstance(v, Fraction):
                v = f"{v.numerator}/{v.denominator}"
            out.append({"src": str(j), "dst": str(k), "value": v if isinstance(v, str) else float(v)})
        return {"arcs": out}

    @classmethod
    def from_dict(cls, D: Digraph, data: dict) -> "ScalarEnrichment":
        C = transitive_closure(D)
        lookup = {str(v): v for v in D.vertices}
        vals = {}
        for rec in data["arcs"]:
            arc = (lookup[rec["src"]], lookup[rec["dst"]])
            if arc not in C.closure_arcs:
                raise CocycleError(f"{arc!r} is not a closure arc")
            v = rec["value"]
            vals[arc] = exact.as_fraction(v) if isinstance(v, (str, int)) else float(v)
        missing = set(C.nonloop_arcs) - set(vals)
        if missing:
            raise CocycleError(f"no value for closure arcs {sorted(map(str, missing))[:5]}")
        return cls(C, vals)


def _close(a, b, rtol: float) -> bool:
    if rtol == 0:
        return a == b
    return math.isclose(a, b, rel_tol=rtol, abs_tol=rtol)


def verify_cocycle(E: ScalarEnrichment, rtol: float = 0.0) -> list[tuple]:
    """Composable triples on which Z_jk Z_kl != Z_jl.

    Besides the nondegenerate paths this covers the returns (j,k,j), where
    the composite is the identity and the product must be 1.
    """
    bad = []
    for j, k, l in nondegenerate_paths(E.closure):
        if not _close(E[(j, k)] * E[(k, l)], E[(j, l)], rtol):
            bad.append((j, k, l))
    for j, k, l in return_paths(E.closure):
        if not _close(E[(j, k)] * E[(k, l)], 1, rtol):
            bad.append((j, k, l))
    return bad


def _check_nondegenerate(values) -> None:
    for v in values:
        if v == 0:
            raise DegeneracyError("generating data must be nonzero")


def solve_from_kernel(B: KernelBasis, c: Sequence, closure: ClosureCategory) -> ScalarEnrichment:
    """Z_jk = prod_i c_i ** y_i[(j,k)] over the kernel basis.

    The result is checked on the triples the basis was built from. A basis
    of the length-two incidence alone need not respect the returns (j,k,j);
    build the incidence ``with_returns`` when those must hold too.
    """
    if len(c) != B.dimension:
        raise ValueError(f"expected {B.dimension} coefficients, got {len(c)}")
    cs = [exact.as_fraction(x) for x in c]
    _check_nondegenerate(cs)
    vals = {}
    for i, arc in enumerate(B.cols):
        z = Fraction(1)
        for ci, y in zip(cs, B.vectors):
            if y[i]:
                z *= ci ** y[i]
        vals[arc] = z
    E = ScalarEnrichment(closure, vals)
    bad = [(j, k, l) for j, k, l in B.rows if E[(j, k)] * E[(k, l)] != E[(j, l)]]
    if bad:
        raise CocycleError(f"kernel solution violates composition on {bad[:5]!r}")
    return E


def _invert(x):
    return Fraction(1) / x if isinstance(x, (Fraction, int)) else 1.0 / x


def _tree_weights(S: SpanningStructure, W: Mapping) -> dict:
    """Normalize tree weights onto the stored edge orientations."""
    out = {}
    for key, val in W.items():
        a, b = key
        out[S.stored(a, b)] = exact.as_fraction(val) if isinstance(val, (str, int)) else val
    missing = [e for e in S.tree_edges if e not in out]
    if missing:
        raise ValueError(f"no weight for tree edges {missing[:5]!r}")
    _check_nondegenerate(out.values())
    return out


def tree_potentials(S: SpanningStructure, W: Mapping) -> dict:
    """Potentials p with p_b = p_a * W^sign(a,b) along every tree edge, 1 at each component root."""
    Wn = _tree_weights(S, W)
    one = Fraction(1) if all(isinstance(v, Fraction) for v in Wn.values()) else 1.0
    p = {}
    for v in S.bfs_order():
        u = S.parent(v)
        if u is None:
            p[v] = one
            continue
        w = Wn[S.stored(u, v)]
        p[v] = p[u] * w if S.sign(u, v) > 0 else p[u] * _invert(w)
    return p


def tree_assignment(C: ClosureCategory, S: SpanningStructure, W: Mapping) -> ScalarEnrichment:
    """Z_jk as the signed product of tree weights along the tree path from j to k.

    Evaluated through tree potentials, Z_jk = p_k / p_j, which is the same
    product with the shared part of the root paths cancelled.
    """
    p = tree_potentials(S, W)
    vals = {(j, k): p[k] * _invert(p[j]) for j, k in C.nonloop_arcs}
    return ScalarEnrichment(C, vals)


def path_product(S: SpanningStructure, W: Mapping, j, k):
    """Direct evaluation of the signed tree-path product (no potentials)."""
    Wn = _tree_weights(S, W)
    z = Fraction(1)
    for (a, b), sign in tree_path(S, j, k):
        w = Wn[S.stored(a, b)]
        z = z * w if sign > 0 else z * _invert(w)
    return z


@dataclass(frozen=True)
class Potentials:
    p: Mapping
    basepoint: object

    def rebuild(self, C: ClosureCategory) -> ScalarEnrichment:
        return ScalarEnrichment(C, {(j, k): self.p[k] * _invert(self.p[j]) for j, k in C.nonloop_arcs})


def extract_potentials(E: ScalarEnrichment, basepoint=None, rtol: float = 0.0) -> Potentials:
    """Recover p with Z_jk = p_j^-1 p_k and p(basepoint) = 1.

    Components not containing the basepoint are anchored at their first vertex.
    """
    C = E.closure
    D = C.base
    one = Fraction(1) if E.exact else 1.0
    adj = {v: [] for v in D.vertices}
    for j, k in C.nonloop_arcs:
        adj[j].append((k, E[(j, k)], True))
        adj[k].append((j, E[(j, k)], False))
    roots = [basepoint] if basepoint is not None else []
    roots += [comp[0] for comp in D.weak_components()]
    p: dict = {}
    for r in roots:
        if r in p:
            continue
        p[r] = one
        queue = deque([r])
        while queue:
            u = queue.popleft()
            for w, z, forward in adj[u]:
                if w in p:
                    continue
                if z == 0:
                    raise CharacterizationError(f"zero value on an arc at {u!r}")
                p[w] = p[u] * z if forward else p[u] * _invert(z)
                queue.append(w)
    for j, k in C.nonloop_arcs:
        if not _close(p[k] * _invert(p[j]), E[(j, k)], rtol):
            raise CharacterizationError(f"value on {(j, k)!r} is not p_j^-1 p_k")
    return Potentials(p, basepoint if basepoint is not None else roots[0])


def enrichment_from_arc_data(D: Digraph, data: Mapping, rtol: float = 0.0) -> ScalarEnrichment:
    """Extend values given on the arcs of D to the closure, via potentials.

    Raises CharacterizationError when the arc data admit no extension.
    """
    C = transitive_closure(D)
    exact_data = all(isinstance(v, (Fraction, int)) for v in data.values())
    one = Fraction(1) if exact_data else 1.0
    adj = {v: [] for v in D.vertices}
    for (j, k), z in data.items():
        if j == k:
            continue
        if z == 0:
            raise DegeneracyError(f"zero datum on {(j, k)!r}")
        adj[j].append((k, z, True))
        adj[k].append((j, z, False))
    p: dict = {}
    for comp in D.weak_components():
        r = comp[0]
        p[r] = one
        queue = deque([r])
        while queue:
            u = queue.popleft()
            for w, z, forward in adj[u]:
                if w not in p:
                    p[w] = p[u] * z if forward else p[u] * _invert(z)
                    queue.append(w)
    for (j, k), z in data.items():
        if j != k and not _close(p[k] * _invert(p[j]), z, rtol):
            raise CharacterizationError(f"arc data inconsistent at {(j, k)!r}")
    return Potentials(p, D.vertices[0] if D.vertices else None).rebuild(C)


@dataclass(frozen=True)
class CycleReport:
    offending_arcs: tuple
    cycles: tuple  # (vertex list, product) per fundamental directed cycle

    @property
    def ok(self) -> bool:
        return all(prod == 1 for _, prod in self.cycles)


def fundamental_cycles(D: Digraph) -> list[list]:
    """One directed cycle per non-loop arc inside a strong component: the arc plus a shortest return path."""
    sc = strong_components(D)
    comp_of = {}
    for comp in sc.components:
        for v in comp:
            comp_of[v] = comp
    cycles = []
    for j, k in D.sorted_arcs():
        if j == k or comp_of[j] is not comp_of[k]:
            continue
        back = D.subgraph(comp_of[j]).shortest_path(k, j)
        cycles.append([j] + back)
    return cycles


def cycle_unity_report(E: ScalarEnrichment) -> CycleReport:
    """Closure arcs lying on directed cycles whose value is not 1, and the product around each fundamental cycle."""
    D = E.closure.base
    sc = strong_components(D)
    comp_id = {}
    for i, comp in enumerate(sc.components):
        for v in comp:
            comp_id[v] = i
    offending = tuple(
        (j, k) for j, k in E.closure.nonloop_arcs if comp_id[j] == comp_id[k] and E[(j, k)] != 1
    )
    cycles = []
    for cyc in fundamental_cycles(D):
        prod = Fraction(1) if E.exact else 1.0
        for a, b in zip(cyc, cyc[1:]):
            prod *= E[(a, b)]
        cycles.append((tuple(cyc), prod))
    return CycleReport(offending, tuple(cycles))


def positive_integer_assignment(C: ClosureCategory, S: SpanningStructure, W: Mapping) -> ScalarEnrichment:
    """Tree assignment that must land in the positive integers on every closure arc.

    Raises IntegralityError naming the offending arcs otherwise; on any arc
    lying on a cycle this forces the value 1.
    """
    E = tree_assignment(C, S, W)
    bad = [a for a, v in E.items() if not (v > 0 and Fraction(v).denominator == 1)]
    if bad:
        raise IntegralityError(bad)
    return E
