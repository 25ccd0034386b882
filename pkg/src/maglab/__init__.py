"""Enrichments of digraph-generated categories, their similarity matrices, and magnitude."""

__version__ = "0.1.0"

from .digraph import (  # noqa: E402
    ClosureCategory,
    Digraph,
    SpanningStructure,
    nondegenerate_paths,
    spanning_structure,
    strong_components,
    structure_from_edges,
    transitive_closure,
    tree_path,
)
from .cocycle import (  # noqa: E402
    ScalarEnrichment,
    build_incidence,
    extract_potentials,
    kernel_basis,
    solve_from_kernel,
    tree_assignment,
    verify_cocycle,
)
from .magnitude import SizeMap, magnitude, similarity_matrix, weighting, weighting_space  # noqa: E402

__all__ = [
    "ClosureCategory",
    "Digraph",
    "ScalarEnrichment",
    "SizeMap",
    "SpanningStructure",
    "build_incidence",
    "extract_potentials",
    "kernel_basis",
    "magnitude",
    "nondegenerate_paths",
    "similarity_matrix",
    "solve_from_kernel",
    "spanning_structure",
    "strong_components",
    "structure_from_edges",
    "transitive_closure",
    "tree_assignment",
    "tree_path",
    "verify_cocycle",
    "weighting",
    "weighting_space",
]
