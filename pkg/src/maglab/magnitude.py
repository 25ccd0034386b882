"""Similarity matrices, weightings, coweightings and magnitude.

Two backends sit behind the same functions. Matrices whose entries are all
rational go through exact elimination; anything else is treated as float64,
with rank decided from singular values at ``1e-10 * s_max``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Any

import numpy as np

from . import exact
from .cocycle import ScalarEnrichment
from .digraph import ClosureCategory

RANK_RTOL = 1e-10
RESIDUAL_TOL = 1e-8
SUM_RTOL = 1e-9


class SizeMapError(TypeError):
    pass


class MagnitudeError(ArithmeticError):
    pass


class SizeMap:
    """Multiplicative size of a hom-object.

    kinds: ``identity`` for scalars, ``determinant`` for square matrices,
    ``schatten`` (with ``p`` in {1, 2, inf}) for any matrix, and
    ``exp_capacity`` for row-stochastic channel matrices.
    """

    KINDS = ("identity", "determinant", "schatten", "exp_capacity")

    def __init__(self, kind: str = "identity", p: float | None = None):
        if kind not in self.KINDS:
            raise ValueError(f"unknown size map {kind!r}")
        if kind == "schatten" and p not in (1, 2, math.inf):
            raise ValueError("schatten size map needs p in {1, 2, inf}")
        self.kind = kind
        self.p = p

    def __repr__(self) -> str:
        return f"SizeMap({self.kind!r}" + (f", p={self.p})" if self.p is not None else ")")

    @classmethod
    def identity(cls) -> "SizeMap":
        return cls("identity")

    @classmethod
    def determinant(cls) -> "SizeMap":
        return cls("determinant")

    @classmethod
    def schatten(cls, p: float) -> "SizeMap":
        return cls("schatten", p)

    @classmethod
    def exp_capacity(cls) -> "SizeMap":
        return cls("exp_capacity")

    def __call__(self, hom: Any):
        if self.kind == "identity":
            if isinstance(hom, (int, float, Fraction, np.number)):
                return hom
            raise SizeMapError("identity size map applies to scalar hom-objects only")
        A = _as_matrix_value(hom)
        if self.kind == "determinant":
            if A.ndim != 2 or A.shape[0] != A.shape[1]:
                raise SizeMapError("determinant size map needs square matrices")
            if A.dtype == object:
                return exact.det(A.tolist())
            return float(np.linalg.det(A))
        if self.kind == "schatten":
            from .matrix_cat import schatten_norm

            return schatten_norm(A, self.p)
        from .channels import Channel, capacity_blahut_arimoto

        ch = hom if isinstance(hom, Channel) else Channel(np.asarray(A, dtype=float))
        return math.exp(capacity_blahut_arimoto(ch, tol=1e-12).capacity)


def _as_matrix_value(hom) -> np.ndarray:
    W = getattr(hom, "W", None)
    if W is not None:
        return np.asarray(W, dtype=float)
    if isinstance(hom, (int, float, Fraction)):
        raise SizeMapError("matrix size map applied to a scalar hom-object")
    A = np.asarray(hom)
    if A.dtype == object and not all(isinstance(x, (Fraction, int)) for x in A.flat):
        A = A.astype(float)
    return A


@dataclass(frozen=True)
class SimilarityMatrix:
    labels: tuple
    Z: np.ndarray

    @property
    def exact(self) -> bool:
        return self.Z.dtype == object

    @property
    def n(self) -> int:
        return len(self.labels)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.Z.astype(float), dtype=dtype)

    def entry(self, j, k):
        idx = {v: i for i, v in enumerate(self.labels)}
        return self.Z[idx[j], idx[k]]

    def transpose(self) -> "SimilarityMatrix":
        return SimilarityMatrix(self.labels, self.Z.T.copy())

    def as_enrichment(self, closure: ClosureCategory) -> ScalarEnrichment:
        return ScalarEnrichment.from_matrix(closure, self.Z)


def similarity_matrix(E, sigma: SizeMap | None = None) -> SimilarityMatrix:
    """Z_jk = sigma(hom(j,k)) on closure arcs, 1 on the diagonal, 0 off the support."""
    sigma = sigma or SizeMap.identity()
    C = E.closure
    homs = E.values if isinstance(E, ScalarEnrichment) else E.homs
    sizes = {arc: sigma(homs[arc]) for arc in C.nonloop_arcs}
    is_exact = all(isinstance(v, (Fraction, int)) for v in sizes.values())
    n = len(C.vertices)
    idx = C.base.index
    if is_exact:
        Z = np.empty((n, n), dtype=object)
        Z.fill(Fraction(0))
        for i in range(n):
            Z[i, i] = Fraction(1)
        for (j, k), v in sizes.items():
            Z[idx[j], idx[k]] = Fraction(v)
    else:
        Z = np.eye(n)
        for (j, k), v in sizes.items():
            Z[idx[j], idx[k]] = float(v)
    return SimilarityMatrix(C.vertices, Z)


def _coerce(Z) -> tuple[np.ndarray, bool]:
    if isinstance(Z, SimilarityMatrix):
        Z = Z.Z
    A = np.asarray(Z)
    if A.dtype == object or np.issubdtype(A.dtype, np.integer):
        if all(isinstance(x, (Fraction, int, np.integer)) for x in A.flat):
            out = np.empty(A.shape, dtype=object)
            for i, x in np.ndenumerate(A):
                out[i] = Fraction(int(x)) if isinstance(x, np.integer) else Fraction(x)
            return out, True
        return A.astype(float), False
    return A.astype(float), False


def numerical_rank(A: np.ndarray) -> int:
    if A.size == 0:
        return 0
    s = np.linalg.svd(A, compute_uv=False)
    return int(np.sum(s > RANK_RTOL * s[0])) if s[0] > 0 else 0


def _float_weighting(A: np.ndarray) -> np.ndarray | None:
    n = A.shape[0]
    ones = np.ones(n)
    if numerical_rank(np.column_stack([A, ones])) != numerical_rank(A):
        return None
    s_max = np.linalg.svd(A, compute_uv=False)[0] if n else 0.0
    w, *_ = np.linalg.lstsq(A, ones, rcond=RANK_RTOL if s_max else None)
    if np.max(np.abs(A @ w - ones), initial=0.0) > RESIDUAL_TOL:
        return None
    return w


def weighting(Z):
    """A solution of Z w = 1, or None when the system is inconsistent.

    Exact input gives the solution with free variables at zero; float input
    gives the least-norm solution.
    """
    A, is_exact = _coerce(Z)
    if is_exact:
        x = exact.solve(A.tolist(), [Fraction(1)] * A.shape[0])
        return None if x is None else np.array(x, dtype=object)
    return _float_weighting(A)


def coweighting(Z):
    """A row vector v with v Z = 1^T, i.e. a weighting of the transpose."""
    A, _ = _coerce(Z)
    return weighting(A.T)


def _kernel(A: np.ndarray, is_exact: bool) -> list[np.ndarray]:
    n = A.shape[1]
    if is_exact:
        return [np.array([Fraction(x) for x in v], dtype=object) for v in exact.nullspace(A.tolist(), n)]
    if A.size == 0:
        return []
    _, s, Vh = np.linalg.svd(A)
    r = int(np.sum(s > RANK_RTOL * s[0])) if s[0] > 0 else 0
    return [Vh[i] for i in range(r, n)]


@dataclass(frozen=True)
class WeightingSpace:
    particular: np.ndarray | None
    kernel: tuple
    coweighting: np.ndarray | None

    @property
    def magnitude(self):
        if self.particular is None or self.coweighting is None:
            return None
        return _checked_sum(self.particular, self.coweighting)

    def kernel_matrix(self) -> np.ndarray:
        """Kernel basis as columns, each scaled to unit max-abs entry."""
        if not self.kernel:
            n = 0 if self.particular is None else len(self.particular)
            return np.zeros((n, 0))
        cols = []
        for v in self.kernel:
            f = np.asarray(v, dtype=float)
            cols.append(f / np.max(np.abs(f)))
        return np.column_stack(cols)

    def to_dict(self) -> dict:
        return {
            "particular": _vec_out(self.particular),
            "kernel_basis": [_vec_out(v) for v in self.kernel],
            "coweighting": _vec_out(self.coweighting),
            "magnitude": _scalar_out(self.magnitude),
        }


def _scalar_out(x):
    if x is None:
        return None
    if isinstance(x, Fraction):
        return str(x)
    return float(x)


def _vec_out(v):
    return None if v is None else [_scalar_out(x) for x in v]


def weighting_space(Z) -> WeightingSpace:
    A, is_exact = _coerce(Z)
    return WeightingSpace(weighting(A), tuple(_kernel(A, is_exact)), weighting(A.T))


def _checked_sum(w, v):
    sw, sv = sum(w), sum(v)
    if isinstance(sw, Fraction) and isinstance(sv, Fraction):
        if sw != sv:
            raise MagnitudeError(f"weighting and coweighting sums differ: {sw} vs {sv}")
        return sw
    sw, sv = float(sw), float(sv)
    if not math.isclose(sw, sv, rel_tol=SUM_RTOL, abs_tol=SUM_RTOL):
        raise MagnitudeError(f"weighting and coweighting sums differ: {sw} vs {sv}")
    return sw


def magnitude(Z):
    """Sum of a weighting, defined only when a coweighting exists as well."""
    w, v = weighting(Z), coweighting(Z)
    if w is None or v is None:
        return None
    return _checked_sum(w, v)


def log_dissimilarity(Z, tau: float = 1.0) -> np.ndarray:
    """d = -tau * log Z on the support of Z, +inf elsewhere."""
    A, _ = _coerce(Z)
    A = A.astype(float)
    support = A != 0
    if np.any(A[support] < 0):
        raise ValueError("log dissimilarity needs positive entries on the support")
    d = np.full(A.shape, np.inf)
    d[support] = -tau * np.log(A[support])
    return d
