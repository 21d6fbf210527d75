"""Exact linear algebra helpers.

Two kinds of matrices appear: structure matrices over Q (nested tuples of
Fraction) and matrices of series (nested lists of LaurentSeries).  Structure
matrices support elimination, solving and nullspaces; series matrices only
need the ring operations and evaluation against rational structure data.
"""

from __future__ import annotations

from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

from .errors import PreconditionError
from .series import LaurentSeries

FracMatrix = Tuple[Tuple[Fraction, ...], ...]
SeriesMatrix = List[List[LaurentSeries]]


# -- rational matrices -------------------------------------------------------


def fmat(rows: Sequence[Sequence]) -> FracMatrix:
    return tuple(tuple(Fraction(x) for x in row) for row in rows)


def fmat_zero(n: int, m: Optional[int] = None) -> FracMatrix:
    m = n if m is None else m
    return tuple((Fraction(0),) * m for _ in range(n))


def fmat_identity(n: int) -> FracMatrix:
    return tuple(tuple(Fraction(1 if i == j else 0) for j in range(n)) for i in range(n))


def fmat_add(a: FracMatrix, b: FracMatrix) -> FracMatrix:
    return tuple(tuple(x + y for x, y in zip(ra, rb)) for ra, rb in zip(a, b))

def fmat_sub(a: FracMatrix, b: FracMatrix) -> FracMatrix:
    return tuple(tuple(x - y for x, y in zip(ra, rb)) for ra, rb in zip(a, b))


def fmat_scale(c, a: FracMatrix) -> FracMatrix:
    c = Fraction(c)
    return tuple(tuple(c * x for x in row) for row in a)


def fmat_mul(a: FracMatrix, b: FracMatrix) -> FracMatrix:
    return tuple(
        tuple(sum((a[i][k] * b[k][j] for k in range(len(b))), Fraction(0))
              for j in range(len(b[0])))
        for i in range(len(a))
    )


def fmat_comm(a: FracMatrix, b: FracMatrix) -> FracMatrix:
    return fmat_sub(fmat_mul(a, b), fmat_mul(b, a))


def fmat_transpose(a: FracMatrix) -> FracMatrix:
    return tuple(zip(*a)) if a else a


def fmat_trace(a: FracMatrix) -> Fraction:
    return sum((a[i][i] for i in range(len(a))), Fraction(0))


def rref(rows: Sequence[Sequence[Fraction]]) -> Tuple[List[List[Fraction]], List[int]]:
    """Reduced row echelon form and the pivot column list."""
    m = [list(map(Fraction, r)) for r in rows]
    nrows = len(m)
    ncols = len(m[0]) if nrows else 0
    pivots: List[int] = []
    r = 0
    for c in range(ncols):
        pr = next((i for i in range(r, nrows) if m[i][c] != 0), None)
        if pr is None:
            continue
        m[r], m[pr] = m[pr], m[r]
        inv = 1 / m[r][c]
        m[r] = [x * inv for x in m[r]]
        for i in range(nrows):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [x - f * y for x, y in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == nrows:
            break
    return m, pivots


def fmat_inverse(a: FracMatrix) -> FracMatrix:
    n = len(a)
    aug = [list(a[i]) + [Fraction(1 if i == j else 0) for j in range(n)] for i in range(n)]
    red, pivots = rref(aug)
    if pivots[:n] != list(range(n)):
        raise PreconditionError("matrix is singular")
    return tuple(tuple(red[i][n:]) for i in range(n))


def solve_exact(a: Sequence[Sequence[Fraction]], b: Sequence[Fraction]) -> List[Fraction]:
    """The unique solution of a consistent full-column-rank system."""
    rows = [list(map(Fraction, r)) + [Fraction(bi)] for r, bi in zip(a, b)]
    ncols = len(a[0])
    red, pivots = rref(rows)
    if ncols in pivots:
        raise PreconditionError("inconsistent linear system")
    if len(pivots) != ncols:
        raise PreconditionError("linear system is underdetermined")
    x = [Fraction(0)] * ncols
    for r, c in enumerate(pivots):
        x[c] = red[r][ncols]
    return x


def nullspace(a: Sequence[Sequence[Fraction]]) -> List[List[Fraction]]:
    """Basis of the right kernel, one vector per free column."""
    if not a:
        return []
    red, pivots = rref(a)
    ncols = len(a[0])
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for f in free:
        v = [Fraction(0)] * ncols
        v[f] = Fraction(1)
        for r, c in enumerate(pivots):
            v[c] = -red[r][f]
        basis.append(v)
    return basis


# -- series matrices ----------------------------------------------------------


def smat_from_frac(a: FracMatrix) -> SeriesMatrix:
    return [[LaurentSeries.constant(x) for x in row] for row in a]


def smat_zero(n: int, m: Optional[int] = None) -> SeriesMatrix:
    m = n if m is None else m
    return [[LaurentSeries.zero() for _ in range(m)] for _ in range(n)]


def smat_identity(n: int) -> SeriesMatrix:
    return [[LaurentSeries.one() if i == j else LaurentSeries.zero() for j in range(n)]
            for i in range(n)]


def smat_add(a: SeriesMatrix, b: SeriesMatrix) -> SeriesMatrix:
    return [[x + y for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def smat_sub(a: SeriesMatrix, b: SeriesMatrix) -> SeriesMatrix:
    return [[x - y for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def smat_scale(c, a: SeriesMatrix) -> SeriesMatrix:
    return [[c * x for x in row] for row in a]


def smat_mul(a: SeriesMatrix, b: SeriesMatrix) -> SeriesMatrix:
    n, k, m = len(a), len(b), len(b[0])
    out = smat_zero(n, m)
    for i in range(n):
        for j in range(m):
            acc = LaurentSeries.zero()
            for t in range(k):
                acc = acc + a[i][t] * b[t][j]
            out[i][j] = acc
    return out


def smat_comm(a: SeriesMatrix, b: SeriesMatrix) -> SeriesMatrix:
    return smat_sub(smat_mul(a, b), smat_mul(b, a))


def smat_transpose(a: SeriesMatrix) -> SeriesMatrix:
    return [list(col) for col in zip(*a)]


def smat_derivative(a: SeriesMatrix) -> SeriesMatrix:
    return [[x.derivative() for x in row] for row in a]


def smat_truncate(a: SeriesMatrix, trunc: Optional[int]) -> SeriesMatrix:
    return [[x.truncate(trunc) for x in row] for row in a]


def smat_is_zero(a: SeriesMatrix) -> bool:
    return all(x.is_zero() for row in a for x in row)


def smat_agrees(a: SeriesMatrix, b: SeriesMatrix) -> bool:
    return all(x.agrees(y) for ra, rb in zip(a, b) for x, y in zip(ra, rb))


def smat_combine(coords: Sequence[LaurentSeries], basis: Sequence[FracMatrix]) -> SeriesMatrix:
    """sum_i coords[i] * basis[i] as a series matrix."""
    if not basis:
        raise PreconditionError("empty basis")
    n, m = len(basis[0]), len(basis[0][0])
    out = smat_zero(n, m)
    for c, mat in zip(coords, basis):
        for i in range(n):
            for j in range(m):
                if mat[i][j] != 0:
                    out[i][j] = out[i][j] + mat[i][j] * c
    return out


def apply_frac(a: FracMatrix, v: Sequence[LaurentSeries]) -> List[LaurentSeries]:
    """Rational matrix acting on a vector of series."""
    out = []
    for row in a:
        acc = LaurentSeries.zero()
        for c, s in zip(row, v):
            if c != 0:
                acc = acc + c * s
        out.append(acc)
    return out
