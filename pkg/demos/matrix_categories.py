"""Matrix hom-objects under multiplication and under the Kronecker product."""

import numpy as np

from maglab import Digraph, similarity_matrix, spanning_structure, transitive_closure, weighting_space
from maglab.magnitude import SizeMap
from maglab.matrix_cat import (
    as_exact_matrix,
    det_size,
    dim_cocycle_solve,
    kronecker_assemble,
    matmul_tree_assignment,
    verify_matmul,
)

# multiplication: generators on a spanning tree, determinants as sizes
D = Digraph([1, 2, 3, 4], [(1, 2), (2, 3), (3, 1), (3, 4)])
C = transitive_closure(D)
S = spanning_structure(D, seed=0)
gens = {e: as_exact_matrix([[2, 1], [1, 1]]) for e in S.tree_edges}
E = matmul_tree_assignment(C, S, gens)
print("composition violations:", verify_matmul(E))
print("determinant sizes:")
for row in det_size(E).Z:
    print("  ", " ".join(str(x) for x in row))

# Kronecker products: dimensions must form an integer cocycle
P = Digraph([1, 2, 3], [(1, 2), (2, 3)])
dims = dim_cocycle_solve(P, {(1, 2): 2, (2, 3): 3})
print("domain dimensions:", dict(dims.s))

rng = np.random.default_rng(0)
kgens = {(1, 2): rng.standard_normal((2, 2)), (2, 3): rng.standard_normal((3, 3))}
K = kronecker_assemble(P, P, kgens)
print("hom(1,3) shape:", K.homs[(1, 3)].shape, "deviation:", K.max_deviation())
Z = similarity_matrix(K, SizeMap.schatten(2))
print("Frobenius sizes:\n", Z.Z)
print("magnitude:", weighting_space(Z).magnitude)
