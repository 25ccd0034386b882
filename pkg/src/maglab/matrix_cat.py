"""Matrix-valued hom-objects on a closure category.

Two composition laws are covered. Under ordinary matrix multiplication the
hom-objects are invertible n x n rational matrices and everything reduces to
matrix potentials. Under the Kronecker product the hom-object sizes form a
pair of multiplicative dimension cocycles, and hom-objects away from a
spanning polytree are recovered by Kronecker products and divisions.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

import numpy as np

from . import exact
from .cocycle import (
    CharacterizationError,
    CocycleError,
    DegeneracyError,
    ScalarEnrichment,
    tree_assignment,
    tree_potentials,
)
from .digraph import (
    ClosureCategory,
    Digraph,
    SpanningStructure,
    nondegenerate_paths,
    return_paths,
    strong_components,
    structure_from_edges,
    transitive_closure,
    tree_path,
)
from .magnitude import SimilarityMatrix, SizeMap, similarity_matrix

KRON_RTOL = 1e-10


class DimensionInfeasibleError(CocycleError):
    def __init__(self, arc, reason: str):
        self.arc = arc
        super().__init__(f"dimension infeasible on arc {arc!r}: {reason}")


class KroneckerDivisionError(ArithmeticError):
    pass


class CompositionError(ArithmeticError):
    pass


# ---------------------------------------------------------------------------
# exact matrices


def as_exact_matrix(A) -> np.ndarray:
    """Object array of Fractions; accepts nested lists, ints, strings like '1/3'."""
    A = np.asarray(A, dtype=object)
    if A.ndim != 2:
        raise ValueError("expected a 2-d matrix")
    out = np.empty(A.shape, dtype=object)
    for i, x in np.ndenumerate(A):
        out[i] = exact.as_fraction(x)
    return out


def exact_identity(n: int) -> np.ndarray:
    return as_exact_matrix(exact.identity(n))


def exact_inverse(A: np.ndarray) -> np.ndarray:
    try:
        return as_exact_matrix(exact.inverse(A.tolist()))
    except ZeroDivisionError:
        raise DegeneracyError("matrix is singular") from None


def unitriangular(x) -> np.ndarray:
    """The 2 x 2 matrix [[1, x], [0, 1]]."""
    return as_exact_matrix([[1, x], [0, 1]])


# ---------------------------------------------------------------------------
# matrix multiplication


@dataclass(frozen=True)
class MatMulEnrichment:
    closure: ClosureCategory
    homs: Mapping = field(repr=False)
    n: int = 0

    def __getitem__(self, arc) -> np.ndarray:
        j, k = arc
        if j == k:
            return exact_identity(self.n)
        return self.homs[(j, k)]


def _tree_matrices(S: SpanningStructure, W: Mapping) -> tuple[dict, int]:
    out = {}
    for (a, b), M in W.items():
        M = as_exact_matrix(M)
        if M.shape[0] != M.shape[1]:
            raise ValueError(f"generator on {(a, b)!r} is not square")
        out[S.stored(a, b)] = M
    missing = [e for e in S.tree_edges if e not in out]
    if missing:
        raise ValueError(f"no matrix for tree edges {missing[:5]!r}")
    sizes = {M.shape[0] for M in out.values()}
    if len(sizes) > 1:
        raise ValueError(f"generators have mixed sizes {sorted(sizes)}")
    n = sizes.pop() if sizes else 1
    for e, M in out.items():
        if exact.det(M.tolist()) == 0:
            raise DegeneracyError(f"generator on {e!r} is singular")
    return out, n


def matmul_potentials(S: SpanningStructure, W: Mapping) -> dict:
    """p with p_b = p_a W_ab (or p_a W_ba^-1 against the stored orientation), identity at roots."""
    Wn, n = _tree_matrices(S, W)
    inv = {e: exact_inverse(M) for e, M in Wn.items()}
    p = {}
    for v in S.bfs_order():
        u = S.parent(v)
        if u is None:
            p[v] = exact_identity(n)
            continue
        e = S.stored(u, v)
        p[v] = p[u].dot(Wn[e] if S.sign(u, v) > 0 else inv[e])
    return p


def matmul_tree_assignment(C: ClosureCategory, S: SpanningStructure, W: Mapping) -> MatMulEnrichment:
    """hom(j,k) = p_j^-1 p_k, i.e. the ordered product of W^(+-1) along the tree path."""
    p = matmul_potentials(S, W)
    n = next(iter(p.values())).shape[0]
    pinv = {v: exact_inverse(M) for v, M in p.items()}
    homs = {(j, k): pinv[j].dot(p[k]) for j, k in C.nonloop_arcs}
    return MatMulEnrichment(C, homs, n)


def matmul_path_product(S: SpanningStructure, W: Mapping, j, k) -> np.ndarray:
    """Ordered product of generators along the tree path, without potentials."""
    Wn, n = _tree_matrices(S, W)
    out = exact_identity(n)
    for (a, b), sign in tree_path(S, j, k):
        M = Wn[S.stored(a, b)]
        out = out.dot(M if sign > 0 else exact_inverse(M))
    return out


def verify_matmul(E: MatMulEnrichment) -> list[tuple]:
    """Triples where hom(j,k) hom(k,l) differs from hom(j,l) (identity on returns)."""
    bad = []
    for j, k, l in nondegenerate_paths(E.closure):
        if not np.array_equal(E[(j, k)].dot(E[(k, l)]), E[(j, l)]):
            bad.append((j, k, l))
    I = exact_identity(E.n)
    for j, k, l in return_paths(E.closure):
        if not np.array_equal(E[(j, k)].dot(E[(k, l)]), I):
            bad.append((j, k, l))
    return bad


def extract_matrix_potentials(E: MatMulEnrichment) -> dict:
    """p with hom(j,k) = p_j^-1 p_k, identity at the first vertex of each weak component."""
    C = E.closure
    adj = {v: [] for v in C.vertices}
    for j, k in C.nonloop_arcs:
        adj[j].append((k, True))
        adj[k].append((j, False))
    p: dict = {}
    for comp in C.base.weak_components():
        r = comp[0]
        p[r] = exact_identity(E.n)
        queue = deque([r])
        while queue:
            u = queue.popleft()
            for w, forward in adj[u]:
                if w in p:
                    continue
                H = E[(u, w)] if forward else E[(w, u)]
                if exact.det(H.tolist()) == 0:
                    raise CharacterizationError(f"singular hom-object between {u!r} and {w!r}")
                p[w] = p[u].dot(H) if forward else p[u].dot(exact_inverse(H))
                queue.append(w)
    for j, k in C.nonloop_arcs:
        if not np.array_equal(exact_inverse(p[j]).dot(p[k]), E[(j, k)]):
            raise CharacterizationError(f"hom({j!r},{k!r}) is not p_j^-1 p_k")
    return p


def det_size(E) -> SimilarityMatrix:
    """Scalar similarity matrix Z_jk = det hom(j,k)."""
    return similarity_matrix(E, SizeMap.determinant())


# ---------------------------------------------------------------------------
# dimension cocycles


@dataclass(frozen=True)
class DimCocycle:
    """Domain (s) and codomain (t) dimensions on every non-loop closure arc."""

    closure: ClosureCategory
    s: Mapping
    t: Mapping

    def shape(self, arc) -> tuple[int, int]:
        j, k = arc
        if j == k:
            return (1, 1)
        return (self.t[arc], self.s[arc])


def reach_set(D: Digraph) -> frozenset:
    """Closure arcs (j,k) whose head lies on or reaches a directed cycle."""
    SC = strong_components(D)
    cyc = {v for comp in SC.components if len(comp) > 1 or (comp[0], comp[0]) in D.arcs for v in comp}
    C = transitive_closure(D)
    hits = cyc | {j for j, k in C.nonloop_arcs if k in cyc}
    return frozenset((j, k) for j, k in C.nonloop_arcs if k in hits)


def _check_positive(dims: Mapping, label: str) -> None:
    for e, d in dims.items():
        if int(d) != d or d < 1:
            raise DimensionInfeasibleError(e, f"{label} dimension {d!r} is not a positive integer")


def _solve_dims(C: ClosureCategory, S: SpanningStructure, weights: Mapping, forced: frozenset, label: str) -> dict:
    E = tree_assignment(C, S, weights)
    out = {}
    for arc, v in E.items():
        if v.denominator != 1:
            raise DimensionInfeasibleError(arc, f"induced {label} dimension {v} is not an integer")
        if arc in forced and v != 1:
            raise DimensionInfeasibleError(arc, f"{label} dimension {v} on an arc reaching a directed cycle")
        out[arc] = int(v)
    return out


def dim_cocycle_solve(
    D: Digraph,
    tree_dims: Mapping,
    tree_codims: Mapping | None = None,
    structure: SpanningStructure | None = None,
    enforce_reach_set: bool = True,
) -> DimCocycle:
    """Extend positive integer dimensions on a spanning forest to all closure arcs.

    ``tree_dims`` maps one arc of D per tree edge to its dimension. The
    extension is the tree assignment with the dimensions as weights; it
    fails, naming the arc, when an induced value is not a positive integer.
    With ``enforce_reach_set`` every arc that reaches a directed cycle must
    carry dimension 1 as well.
    """
    S = structure or structure_from_edges(D, list(tree_dims))
    C = transitive_closure(D)
    codims = tree_dims if tree_codims is None else tree_codims
    key = {frozenset(e): e for e in S.tree_edges}
    for dims, label in ((tree_dims, "domain"), (codims, "codomain")):
        if {frozenset(e) for e in dims} != set(key) or len(dims) != len(key):
            raise ValueError("dimensions must be given on exactly one arc per tree edge")
        _check_positive(dims, label)
    forced = reach_set(D) if enforce_reach_set else frozenset()
    if forced:
        for dims, label in ((tree_dims, "domain"), (codims, "codomain")):
            for arc, d in dims.items():
                if arc in forced and d != 1:
                    raise DimensionInfeasibleError(arc, f"requested {label} dimension {d} on an arc reaching a directed cycle")

    def weights(dims):
        # a value on the reversed pair of a stored edge enters as its inverse
        out = {}
        for (a, b), d in dims.items():
            e = key[frozenset((a, b))]
            out[e] = Fraction(int(d)) if (a, b) == e else 1 / Fraction(int(d))
        return out

    s = _solve_dims(C, S, weights(tree_dims), forced, "domain")
    t = _solve_dims(C, S, weights(codims), forced, "codomain")
    return DimCocycle(C, s, t)


def dims_from_generators(D: Digraph, gens: Mapping, structure: SpanningStructure | None = None) -> DimCocycle:
    """Dimension cocycle read off generator shapes (rows = codomain, cols = domain)."""
    shapes = {e: np.shape(g) for e, g in gens.items()}
    return dim_cocycle_solve(
        D,
        {e: sh[1] for e, sh in shapes.items()},
        {e: sh[0] for e, sh in shapes.items()},
        structure=structure,
        enforce_reach_set=False,
    )


# ---------------------------------------------------------------------------
# Kronecker products


def _pivot(A: np.ndarray) -> tuple[int, int]:
    if A.size == 0 or not np.any(A != 0):
        raise KroneckerDivisionError("division by a matrix with no nonzero entry")
    flat = int(np.argmax(np.abs(A)))
    return divmod(flat, A.shape[1])


def _check_kron(X, A, B, rtol: float) -> None:
    scale = max(np.max(np.abs(X)), 1e-300)
    if np.max(np.abs(np.kron(A, B) - X)) > rtol * scale:
        raise KroneckerDivisionError("matrix is not a Kronecker product with the given factor")


def kronecker_divide_left(X, A, rtol: float = KRON_RTOL) -> np.ndarray:
    """B with A (x) B = X."""
    X, A = np.asarray(X), np.asarray(A)
    (p, q), (m, n) = A.shape, X.shape
    if m % p or n % q:
        raise KroneckerDivisionError(f"shape {X.shape} is not divisible by {A.shape}")
    r, c = m // p, n // q
    i, j = _pivot(A)
    B = X[i * r : (i + 1) * r, j * c : (j + 1) * c] / A[i, j]
    _check_kron(X, A, B, rtol)
    return B


def kronecker_divide_right(X, B, rtol: float = KRON_RTOL) -> np.ndarray:
    """A with A (x) B = X."""
    X, B = np.asarray(X), np.asarray(B)
    (r, c), (m, n) = B.shape, X.shape
    if m % r or n % c:
        raise KroneckerDivisionError(f"shape {X.shape} is not divisible by {B.shape}")
    k, l = _pivot(B)
    A = X[k::r, l::c] / B[k, l]
    _check_kron(X, A, B, rtol)
    return A


@dataclass(frozen=True)
class KroneckerEnrichment:
    closure: ClosureCategory
    dims: DimCocycle
    homs: Mapping = field(repr=False)

    def __getitem__(self, arc) -> np.ndarray:
        j, k = arc
        if j == k:
            return np.ones((1, 1))
        return self.homs[(j, k)]

    def max_deviation(self) -> float:
        """Largest relative deviation of hom(j,k) (x) hom(k,l) from hom(j,l)."""
        worst = 0.0
        for j, k, l in nondegenerate_paths(self.closure):
            X = self[(j, l)]
            P = np.kron(self[(j, k)], self[(k, l)])
            if P.shape != X.shape:
                return float("inf")
            scale = max(np.max(np.abs(X)), 1e-300)
            worst = max(worst, float(np.max(np.abs(P - X)) / scale))
        return worst


def _virtual_dims_integral(pot_s: Mapping, pot_t: Mapping, u, w) -> bool:
    return (pot_s[w] / pot_s[u]).denominator == 1 and (pot_t[w] / pot_t[u]).denominator == 1


def _tree_potentials_int(S: SpanningStructure, dims: Mapping) -> dict:
    return tree_potentials(S, {e: Fraction(d) for e, d in dims.items()})


def _path_value(walk: list, gens: Mapping, P: SpanningStructure, pots, memo: dict) -> np.ndarray:
    """Kronecker value of the virtual hom along a polytree walk.

    The walk is peeled one edge at a time from whichever end keeps the
    remaining sub-walk at integral dimensions; forward edges multiply and
    reversed edges divide.
    """
    key = tuple(walk)
    if key in memo:
        return memo[key]
    if len(walk) == 1:
        return np.ones((1, 1))
    first, last = (walk[0], walk[1]), (walk[-2], walk[-1])
    candidates = []
    fwd_first = P.sign(*first) > 0
    fwd_last = P.sign(*last) > 0
    if fwd_first:
        candidates.append(("first_fwd", walk[1:]))
    if fwd_last:
        candidates.append(("last_fwd", walk[:-1]))
    if not fwd_last:
        candidates.append(("last_bwd", walk[:-1]))
    if not fwd_first:
        candidates.append(("first_bwd", walk[1:]))
    for kind, sub in candidates:
        if len(sub) > 1 and not _virtual_dims_integral(*pots, sub[0], sub[-1]):
            continue
        try:
            rest = _path_value(sub, gens, P, pots, memo)
            if kind == "first_fwd":
                out = np.kron(gens[first], rest)
            elif kind == "last_fwd":
                out = np.kron(rest, gens[last])
            elif kind == "last_bwd":
                out = kronecker_divide_right(rest, gens[(last[1], last[0])])
            else:
                out = kronecker_divide_left(rest, gens[(first[1], first[0])])
        except KroneckerDivisionError:
            continue
        memo[key] = out
        return out
    raise KroneckerDivisionError(f"no integral factorization of the polytree walk {walk!r}")


def _tree_walk(P: SpanningStructure, j, k) -> list:
    steps = tree_path(P, j, k)
    return [j] + [b for (_, b), _ in steps]


def kronecker_assemble(
    D: Digraph, P, gens: Mapping, dims: DimCocycle | None = None, rtol: float = KRON_RTOL
) -> KroneckerEnrichment:
    """Hom-objects on every closure arc of a DAG from generators on a spanning polytree.

    Values forced by composable triples are propagated first (products,
    left and right divisions). Arcs left undetermined take the Kronecker
    value of their polytree walk. The result is checked on every
    nondegenerate path.
    """
    if not strong_components(D).is_dag:
        raise ValueError("Kronecker assembly needs a DAG")
    if not isinstance(P, SpanningStructure):
        P = structure_from_edges(D, P.arcs if isinstance(P, Digraph) else P)
    G = {}
    for (a, b), M in gens.items():
        if P.stored(a, b) != (a, b):
            raise ValueError(f"generator on {(a, b)!r} runs against the polytree arc")
        M = np.asarray(M)
        if M.ndim != 2:
            raise ValueError(f"generator on {(a, b)!r} is not a matrix")
        if not np.any(M != 0):
            raise KroneckerDivisionError(f"generator on {(a, b)!r} is degenerate (all zero)")
        G[(a, b)] = M
    missing = [e for e in P.tree_edges if e not in G]
    if missing:
        raise ValueError(f"no generator for polytree arcs {missing[:5]!r}")
    if dims is None:
        dims = dims_from_generators(D, G, P)
    for e, M in G.items():
        if M.shape != dims.shape(e):
            raise ValueError(f"generator on {e!r} has shape {M.shape}, expected {dims.shape(e)}")
    C = transitive_closure(D)
    dtype = np.result_type(*G.values(), np.float64)
    homs = {a: np.asarray(G[a], dtype=dtype) for a in C.nonloop_arcs if a in G}
    triples = nondegenerate_paths(C)
    pots = (
        _tree_potentials_int(P, {e: dims.s[e] for e in P.tree_edges}),
        _tree_potentials_int(P, {e: dims.t[e] for e in P.tree_edges}),
    )
    memo = {}
    while True:
        changed = True
        while changed:
            changed = False
            for j, k, l in triples:
                jk, kl, jl = (j, k), (k, l), (j, l)
                have = (jk in homs, kl in homs, jl in homs)
                if have == (True, True, False):
                    homs[jl] = np.kron(homs[jk], homs[kl])
                elif have == (True, False, True):
                    homs[kl] = kronecker_divide_left(homs[jl], homs[jk], rtol)
                elif have == (False, True, True):
                    homs[jk] = kronecker_divide_right(homs[jl], homs[kl], rtol)
                else:
                    continue
                changed = True
        todo = [a for a in C.nonloop_arcs if a not in homs]
        if not todo:
            break
        a = todo[0]
        homs[a] = _path_value(_tree_walk(P, *a), G, P, pots, memo).astype(dtype)
    E = KroneckerEnrichment(C, dims, homs)
    for arc, H in homs.items():
        if H.shape != dims.shape(arc):
            raise CompositionError(f"hom{arc!r} has shape {H.shape}, expected {dims.shape(arc)}")
    dev = E.max_deviation()
    if dev > rtol:
        raise CompositionError(f"Kronecker composition fails by {dev:.3g} (relative)")
    return E


def schatten_norm(A, p) -> float:
    """l_p norm of the singular values of A, for p in {1, 2, inf}."""
    s = np.linalg.svd(np.asarray(A, dtype=complex if np.iscomplexobj(A) else float), compute_uv=False)
    if p == 1:
        return float(np.sum(s))
    if p == 2:
        return float(np.sqrt(np.sum(s**2)))
    if p == np.inf:
        return float(s[0]) if s.size else 0.0
    raise ValueError("p must be 1, 2 or inf")


def stochastic_check(D: Digraph, homs: Mapping, atol: float = 1e-12) -> None:
    """Row-stochastic hom-objects are only admitted on DAGs."""
    if not strong_components(D).is_dag:
        raise ValueError("stochastic hom-objects need an acyclic digraph")
    for arc, H in homs.items():
        H = np.asarray(H, dtype=float)
        if np.any(H < -atol) or np.max(np.abs(H.sum(axis=1) - 1.0), initial=0.0) > atol:
            raise ValueError(f"hom{arc!r} is not row-stochastic")


def scalar_from_kronecker(E: KroneckerEnrichment) -> ScalarEnrichment:
    """1 x 1 hom-objects read as scalars."""
    vals = {}
    for a, H in E.homs.items():
        if H.shape != (1, 1):
            raise ValueError("hom-objects are not 1 x 1")
        vals[a] = H[0, 0].item()
    return ScalarEnrichment(E.closure, vals)
