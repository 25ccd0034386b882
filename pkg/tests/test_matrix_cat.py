import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from graphs import random_dag, random_rational, random_tree_arcs, random_weak_digraph
from maglab.cocycle import DegeneracyError, tree_assignment, verify_cocycle
from maglab.digraph import (
    Digraph,
    nondegenerate_paths,
    return_paths,
    spanning_structure,
    structure_from_edges,
    transitive_closure,
)
from maglab.magnitude import SizeMap, similarity_matrix
from maglab.matrix_cat import (
    DimensionInfeasibleError,
    KroneckerDivisionError,
    as_exact_matrix,
    det_size,
    dim_cocycle_solve,
    exact_identity,
    extract_matrix_potentials,
    kronecker_assemble,
    kronecker_divide_left,
    kronecker_divide_right,
    matmul_path_product,
    matmul_tree_assignment,
    reach_set,
    scalar_from_kronecker,
    schatten_norm,
    stochastic_check,
    unitriangular,
    verify_matmul,
)
from maglab.nn_outliers import mlp_dag

F = Fraction


def path(n):
    return Digraph(range(1, n + 1), [(i, i + 1) for i in range(1, n)])


def to_sympy(M):
    return sympy.Matrix([[sympy.Rational(x.numerator, x.denominator) for x in r] for r in M.tolist()])


def random_invertible(rng, n=2):
    while True:
        M = as_exact_matrix([[random_rational(rng, True) for _ in range(n)] for _ in range(n)])
        if to_sympy(M).det() != 0:
            return M


# matrix multiplication -----------------------------------------------------


def test_matmul_examples():
    D = path(3)
    C = transitive_closure(D)
    S = structure_from_edges(D, D.arcs)
    A = as_exact_matrix([[1, 2], [3, 4]])
    B = as_exact_matrix([[0, 1], [1, 0]])
    E = matmul_tree_assignment(C, S, {(1, 2): A, (2, 3): B})
    assert np.array_equal(E[(1, 3)], A.dot(B))
    assert np.array_equal(E[(1, 2)].dot(E[(2, 3)]), E[(1, 3)])
    I = matmul_tree_assignment(C, S, {(1, 2): exact_identity(2), (2, 3): exact_identity(2)})
    assert all(np.array_equal(H, exact_identity(2)) for H in I.homs.values())
    with pytest.raises(DegeneracyError):
        matmul_tree_assignment(C, S, {(1, 2): as_exact_matrix([[1, 2], [2, 4]]), (2, 3): B})
    with pytest.raises(ValueError):
        matmul_tree_assignment(C, S, {(1, 2): A, (2, 3): exact_identity(3)})


def test_unitriangular_generators_have_unit_determinant():
    L = mlp_dag((4, 4, 4), keep_prob=0.5, seed=0)
    G = L.digraph
    S = spanning_structure(G, 0)
    rng = np.random.default_rng(0)
    E = matmul_tree_assignment(transitive_closure(G), S, {e: unitriangular(random_rational(rng, True)) for e in S.tree_edges})
    assert all(to_sympy(H).det() == 1 for H in E.homs.values())
    Z = det_size(E).Z
    assert all(Z[G.index[j], G.index[k]] == 1 for j, k in E.closure.nonloop_arcs)
    assert np.array_equal(det_size(E).Z != 0, similarity_matrix(tree_assignment(E.closure, S, {e: 1 for e in S.tree_edges})).Z != 0)


def test_det_size_of_diagonal():
    D = Digraph([1, 2], [(1, 2)])
    E = matmul_tree_assignment(transitive_closure(D), structure_from_edges(D, D.arcs), {(1, 2): as_exact_matrix([[2, 0], [0, 3]])})
    assert det_size(E).Z[0, 1] == 6


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.integers(2, 6), st.integers(0, 20))
def test_matmul_composition_and_potentials(gseed, n, seed):
    rng = np.random.default_rng(gseed)
    D = random_weak_digraph(rng, n, 0.2)
    C = transitive_closure(D)
    S = spanning_structure(D, seed)
    W = {e: random_invertible(rng) for e in S.tree_edges}
    E = matmul_tree_assignment(C, S, W)
    assert verify_matmul(E) == []
    for j, k in C.nonloop_arcs:
        assert np.array_equal(E[(j, k)], matmul_path_product(S, W, j, k))
    p = extract_matrix_potentials(E)
    for j, k in C.nonloop_arcs:
        assert to_sympy(p[j]).inv() * to_sympy(p[k]) == to_sympy(E[(j, k)])
    # the determinant factors the enrichment through the scalar case
    Zs = det_size(E).as_enrichment(C)
    assert verify_cocycle(Zs) == []


def test_matmul_is_noncommutative_along_paths():
    D = path(3)
    S = structure_from_edges(D, D.arcs)
    A, B = as_exact_matrix([[1, 1], [0, 1]]), as_exact_matrix([[1, 0], [1, 1]])
    E = matmul_tree_assignment(transitive_closure(D), S, {(1, 2): A, (2, 3): B})
    assert not np.array_equal(E[(1, 3)], B.dot(A))


# dimension cocycles --------------------------------------------------------


def test_dim_cocycle_examples():
    D = path(3)
    dc = dim_cocycle_solve(D, {(1, 2): 2, (2, 3): 3})
    assert (dc.s[(1, 2)], dc.s[(2, 3)], dc.s[(1, 3)]) == (2, 3, 6)
    assert dc.shape((1, 3)) == (6, 6)
    two = Digraph([1, 2], [(1, 2), (2, 1)])
    with pytest.raises(DimensionInfeasibleError):
        dim_cocycle_solve(two, {(1, 2): 2})
    with pytest.raises(DimensionInfeasibleError):
        dim_cocycle_solve(two, {(1, 2): 2}, enforce_reach_set=False)
    ones = dim_cocycle_solve(two, {(1, 2): 1})
    assert set(ones.s.values()) == {1}
    with pytest.raises(DimensionInfeasibleError):
        dim_cocycle_solve(D, {(1, 2): 0, (2, 3): 1})
    with pytest.raises(ValueError):
        dim_cocycle_solve(D, {(1, 2): 2})


def test_reversed_tree_edge_must_divide():
    # 1 -> 2, 1 -> 3, 2 -> 3 with tree {1-2, 1-3}: s_23 = s_13 / s_12
    D = Digraph([1, 2, 3], [(1, 2), (1, 3), (2, 3)])
    assert dim_cocycle_solve(D, {(1, 2): 2, (1, 3): 6}).s[(2, 3)] == 3
    with pytest.raises(DimensionInfeasibleError) as info:
        dim_cocycle_solve(D, {(1, 2): 2, (1, 3): 3})
    assert info.value.arc == (2, 3)


def test_reach_set_forcing():
    # 0 -> 1 with 1 <-> 2: the arc into the cycle is forced to 1 by default
    D = Digraph([0, 1, 2], [(0, 1), (1, 2), (2, 1)])
    assert reach_set(D) == {(0, 1), (0, 2), (1, 2), (2, 1)}
    with pytest.raises(DimensionInfeasibleError):
        dim_cocycle_solve(D, {(0, 1): 2, (1, 2): 1})
    # composition alone does not force it
    relaxed = dim_cocycle_solve(D, {(0, 1): 2, (1, 2): 1}, enforce_reach_set=False)
    assert relaxed.s[(0, 1)] == relaxed.s[(0, 2)] == 2


def _brute_force(D, fixed, bound):
    """All positive integer assignments on closure arcs, <= bound, extending ``fixed``."""
    C = transitive_closure(D)
    arcs = list(C.nonloop_arcs)
    free = [a for a in arcs if a not in fixed]
    constraints = [(t, True) for t in nondegenerate_paths(C)] + [(t, False) for t in return_paths(C)]
    sols = []
    for vals in itertools.product(range(1, bound + 1), repeat=len(free)):
        s = dict(fixed)
        s.update(zip(free, vals))
        ok = all(
            s[(j, k)] * s[(k, l)] == (s[(j, l)] if nd else 1) for (j, k, l), nd in constraints
        )
        if ok:
            sols.append(s)
    return sols


def _small_digraphs():
    rng = np.random.default_rng(21)
    out = [
        Digraph([0, 1, 2], [(0, 1), (1, 2), (0, 2)]),
        Digraph([0, 1, 2], [(0, 1), (0, 2), (1, 2)]),
        Digraph([0, 1, 2], [(0, 1), (1, 2), (2, 1)]),
        Digraph([0, 1, 2, 3], [(0, 1), (1, 2), (2, 3), (0, 3)]),
    ]
    while len(out) < 10:
        n = int(rng.integers(3, 5))
        D = random_weak_digraph(rng, n, 0.2)
        if len(transitive_closure(D).nonloop_arcs) <= 7:
            out.append(D)
    return out


def test_dim_cocycle_matches_brute_force():
    for D in _small_digraphs():
        S = spanning_structure(D, 0)
        tree = list(S.tree_edges)
        C = transitive_closure(D)
        depth = len(tree)
        for dims in itertools.product((1, 2, 3), repeat=len(tree)):
            fixed = dict(zip(tree, dims))
            brute = _brute_force(D, fixed, 3**depth)
            try:
                dc = dim_cocycle_solve(D, fixed, structure=S, enforce_reach_set=False)
            except DimensionInfeasibleError:
                # either nothing extends the tree values, or the extension is not of tree form
                assert all(
                    any(s[a] != _ratio(fixed, S, C, a) for a in C.nonloop_arcs) for s in brute
                )
                continue
            assert dc.s in brute
            forced = reach_set(D)
            try:
                dim_cocycle_solve(D, fixed, structure=S)
                assert all(dc.s[a] == 1 for a in forced)
            except DimensionInfeasibleError:
                assert any(dc.s[a] != 1 for a in forced)


def _ratio(fixed, S, C, arc):
    return tree_assignment(C, S, {e: F(d) for e, d in fixed.items()})[arc]


# Kronecker products --------------------------------------------------------


def test_kronecker_division_examples():
    rng = np.random.default_rng(0)
    for _ in range(50):
        A = rng.standard_normal((int(rng.integers(1, 4)), int(rng.integers(1, 4))))
        B = rng.standard_normal((int(rng.integers(1, 4)), int(rng.integers(1, 4))))
        X = np.kron(A, B)
        assert np.allclose(kronecker_divide_left(X, A), B, rtol=1e-12, atol=0)
        assert np.allclose(kronecker_divide_right(X, B), A, rtol=1e-12, atol=0)
    with pytest.raises(KroneckerDivisionError):
        kronecker_divide_left(rng.standard_normal((4, 4)), rng.standard_normal((2, 2)))
    with pytest.raises(KroneckerDivisionError):
        kronecker_divide_left(np.ones((4, 4)), np.zeros((2, 2)))
    with pytest.raises(KroneckerDivisionError):
        kronecker_divide_left(np.ones((3, 4)), np.ones((2, 2)))


def test_kronecker_path_example():
    D = path(3)
    A = np.array([[1.0, 2.0], [3.0, 4.0]])
    B = np.array([[0.0, 1.0], [1.0, 0.0]])
    E = kronecker_assemble(D, D.arcs, {(1, 2): A, (2, 3): B})
    assert np.array_equal(E[(1, 3)], np.kron(A, B))
    assert E.max_deviation() == 0
    assert E.dims.shape((1, 3)) == (4, 4)


def test_kronecker_reversed_edge_divides():
    # triangle with polytree {1->2, 1->3}: hom(2,3) is recovered by division
    D = Digraph([1, 2, 3], [(1, 2), (2, 3), (1, 3)])
    rng = np.random.default_rng(1)
    A, B = rng.standard_normal((2, 3)), rng.standard_normal((3, 2))
    E = kronecker_assemble(D, [(1, 2), (1, 3)], {(1, 2): A, (1, 3): np.kron(A, B)})
    assert np.allclose(E[(2, 3)], B, rtol=1e-12)
    with pytest.raises(KroneckerDivisionError):
        kronecker_assemble(D, [(1, 2), (1, 3)], {(1, 2): A, (1, 3): rng.standard_normal((6, 6))})
    with pytest.raises(KroneckerDivisionError):
        kronecker_assemble(D, [(1, 2), (1, 3)], {(1, 2): np.zeros((2, 3)), (1, 3): np.kron(A, B)})
    with pytest.raises(ValueError):
        kronecker_assemble(Digraph([1, 2], [(1, 2), (2, 1)]), [(1, 2)], {(1, 2): A})


def test_one_by_one_generators_recover_scalars():
    rng = np.random.default_rng(5)
    for trial in range(20):
        D = random_dag(rng, 6)
        S = spanning_structure(D, trial)
        vals = {e: float(random_rational(rng, True)) for e in S.tree_edges}
        E = kronecker_assemble(D, S, {e: np.array([[v]]) for e, v in vals.items()})
        Es = scalar_from_kronecker(E)
        ref = tree_assignment(E.closure, S, vals)
        for a in E.closure.nonloop_arcs:
            assert math.isclose(Es[a], ref[a], rel_tol=1e-12)


def _dag_over_polytree(rng, n):
    """A random polytree P and a DAG D with P <= D <= closure(P)."""
    P = Digraph(range(n), random_tree_arcs(rng, n))
    C = transitive_closure(P)
    extra = [a for a in C.nonloop_arcs if a not in P.arcs and rng.random() < 0.5]
    return P, Digraph(range(n), list(P.arcs) + extra)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.integers(2, 7))
def test_random_assembly_composes(seed, n):
    rng = np.random.default_rng(seed)
    P, D = _dag_over_polytree(rng, n)
    gens = {a: rng.standard_normal((int(rng.integers(1, 3)), int(rng.integers(1, 3)))) for a in P.arcs}
    E = kronecker_assemble(D, P, gens)
    assert E.max_deviation() <= 1e-10
    for a, H in E.homs.items():
        assert H.shape == E.dims.shape(a)


def test_schatten_examples():
    for n in (1, 3, 5):
        I = np.eye(n)
        assert math.isclose(schatten_norm(I, 1), n)
        assert math.isclose(schatten_norm(I, 2), math.sqrt(n))
        assert schatten_norm(I, np.inf) == 1
    M = np.diag([3.0, 4.0])
    assert [schatten_norm(M, p) for p in (1, 2, np.inf)] == pytest.approx([7, 5, 4], rel=1e-14)
    rng = np.random.default_rng(2)
    for _ in range(20):
        A, B = rng.standard_normal((2, 3)), rng.standard_normal((3, 3))
        for p in (1, 2, np.inf):
            assert math.isclose(schatten_norm(np.kron(A, B), p), schatten_norm(A, p) * schatten_norm(B, p), rel_tol=1e-10)
        assert math.isclose(schatten_norm(A, 2), np.linalg.norm(A, "fro"), rel_tol=1e-12)
        assert math.isclose(schatten_norm(A, np.inf), np.linalg.norm(A, 2), rel_tol=1e-12)
    with pytest.raises(ValueError):
        schatten_norm(M, 3)


def test_schatten_similarity_is_a_scalar_cocycle():
    rng = np.random.default_rng(8)
    P, D = _dag_over_polytree(rng, 6)
    E = kronecker_assemble(D, P, {a: rng.standard_normal((2, 2)) for a in P.arcs})
    for p in (1, 2, math.inf):
        Z = similarity_matrix(E, SizeMap.schatten(p))
        assert verify_cocycle(Z.as_enrichment(E.closure), rtol=1e-10) == []


def test_stochastic_check():
    D = path(3)
    stochastic_check(D, {(1, 2): np.array([[0.5, 0.5]])})
    with pytest.raises(ValueError):
        stochastic_check(D, {(1, 2): np.array([[0.5, 0.6]])})
    with pytest.raises(ValueError):
        stochastic_check(Digraph([1, 2], [(1, 2), (2, 1)]), {})
