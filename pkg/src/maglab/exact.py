"""Exact rational linear algebra on lists of :class:`fractions.Fraction`.

Elimination is carried out on integer-scaled rows (content removed after
every update), which is considerably faster than operating on ``Fraction``
entries directly while staying exact.
"""

from __future__ import annotations

from fractions import Fraction
from functools import reduce
from math import gcd, lcm
from typing import Sequence

Rational = Fraction


def as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x.strip())
    return Fraction(x)


def _int_row(row: Sequence) -> list[int]:
    fr = [as_fraction(x) for x in row]
    den = reduce(lcm, (x.denominator for x in fr), 1)
    return [x.numerator * (den // x.denominator) for x in fr]


def _primitive(row: list[int]) -> list[int]:
    g = 0
    for x in row:
        if x:
            g = gcd(g, x)
            if g == 1:
                return row
    if g > 1:
        return [x // g for x in row]
    return row


def rref(rows: Sequence[Sequence], ncols: int | None = None) -> tuple[list[list[Fraction]], list[int]]:
    """Reduced row echelon form.

    Returns the nonzero rows of the RREF (as Fractions) and the pivot
    column of each of them.
    """
    mat = [_int_row(r) for r in rows]
    if ncols is None:
        ncols = len(mat[0]) if mat else 0
    pivots: list[int] = []
    r = 0
    nrows = len(mat)
    for c in range(ncols):
        if r == nrows:
            break
        p = next((i for i in range(r, nrows) if mat[i][c]), None)
        if p is None:
            continue
        mat[r], mat[p] = mat[p], mat[r]
        prow = mat[r]
        a = prow[c]
        nz = [k for k in range(c, ncols) if prow[k]]
        for i in range(nrows):
            if i == r:
                continue
            row = mat[i]
            b = row[c]
            if not b:
                continue
            g = gcd(a, b)
            fa, fb = a // g, b // g
            if fa != 1:
                row = [fa * x for x in row]
            for k in nz:
                row[k] -= fb * prow[k]
            mat[i] = _primitive(row)
        pivots.append(c)
        r += 1
    out = []
    for i, c in enumerate(pivots):
        piv = mat[i][c]
        out.append([Fraction(x, piv) for x in mat[i]])
    return out, pivots


def rank(rows: Sequence[Sequence], ncols: int | None = None) -> int:
    return len(rref(rows, ncols)[1])


def integer_normalize(vec: Sequence[Fraction]) -> list[int]:
    """Scale a rational vector to integers with gcd 1 and first nonzero entry positive."""
    ints = _primitive(_int_row(vec))
    lead = next((x for x in ints if x), 0)
    if lead < 0:
        ints = [-x for x in ints]
    return ints


def nullspace(rows: Sequence[Sequence], ncols: int) -> list[list[int]]:
    """Integer basis of the right null space, one vector per free column.

    Each vector is the free-variable solution read off the RREF, rescaled
    by :func:`integer_normalize`.
    """
    R, pivots = rref(rows, ncols)
    pivset = set(pivots)
    basis = []
    for f in range(ncols):
        if f in pivset:
            continue
        x = [Fraction(0)] * ncols
        x[f] = Fraction(1)
        for row, pc in zip(R, pivots):
            x[pc] = -row[f]
        basis.append(integer_normalize(x))
    return basis


def solve(A: Sequence[Sequence], b: Sequence) -> list[Fraction] | None:
    """One exact solution of ``A x = b`` (free variables set to 0), or None if inconsistent."""
    n = len(A[0]) if A else 0
    aug = [list(row) + [bi] for row, bi in zip(A, b)]
    R, pivots = rref(aug, n + 1)
    if pivots and pivots[-1] == n:
        return None
    x = [Fraction(0)] * n
    for row, pc in zip(R, pivots):
        x[pc] = row[n]
    return x


def matmul(A, B) -> list[list[Fraction]]:
    Bt = list(zip(*B))
    return [[sum((a * b for a, b in zip(row, col)), Fraction(0)) for col in Bt] for row in A]


def det(A: Sequence[Sequence]) -> Fraction:
    n = len(A)
    M = [[as_fraction(x) for x in row] for row in A]
    d = Fraction(1)
    for c in range(n):
        p = next((i for i in range(c, n) if M[i][c]), None)
        if p is None:
            return Fraction(0)
        if p != c:
            M[c], M[p] = M[p], M[c]
            d = -d
        piv = M[c][c]
        d *= piv
        for i in range(c + 1, n):
            f = M[i][c] / piv
            if f:
                M[i] = [x - f * y for x, y in zip(M[i], M[c])]
    return d


def inverse(A: Sequence[Sequence]) -> list[list[Fraction]]:
    """Exact inverse; raises ZeroDivisionError for singular input."""
    n = len(A)
    aug = [list(row) + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(A)]
    R, pivots = rref(aug, 2 * n)
    if pivots[:n] != list(range(n)) or len(pivots) < n:
        raise ZeroDivisionError("matrix is singular")
    return [row[n:] for row in R[:n]]


def identity(n: int) -> list[list[Fraction]]:
    return [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
