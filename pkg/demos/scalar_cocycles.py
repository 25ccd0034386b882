"""Tree weights on a small digraph extended to a multiplicative cocycle, then its magnitude."""

from fractions import Fraction

from maglab import (
    Digraph,
    build_incidence,
    extract_potentials,
    kernel_basis,
    similarity_matrix,
    structure_from_edges,
    transitive_closure,
    tree_assignment,
    verify_cocycle,
    weighting_space,
)

# a diamond 1 -> {2, 3} -> 4 with a shortcut 1 -> 4
D = Digraph([1, 2, 3, 4], [(1, 2), (1, 3), (2, 4), (3, 4), (1, 4)])
C = transitive_closure(D)

M = build_incidence(C)
B = kernel_basis(M)
print("closure arcs:", C.nonloop_arcs)
print("length-two paths:", M.rows)
print("kernel dimension:", B.dimension)

# a spanning tree fixes everything: the other arcs follow from potentials
S = structure_from_edges(D, [(1, 2), (1, 3), (2, 4)])
E = tree_assignment(C, S, {(1, 2): Fraction(2), (1, 3): Fraction(1, 3), (2, 4): Fraction(5)})
print("values:", {a: str(v) for a, v in E.items()})
print("violations:", verify_cocycle(E))
print("potentials:", {v: str(p) for v, p in extract_potentials(E).p.items()})

Z = similarity_matrix(E)
ws = weighting_space(Z)
print("Z =")
for row in Z.Z:
    print("  ", " ".join(f"{str(x):>5}" for x in row))
print("weighting:", [str(x) for x in ws.particular], "magnitude:", ws.magnitude)
