"""Classical matrix models with their principal grading.

Each model is a family letter and a rank: traceless matrices for A, and the
stabilizer of an antidiagonal bilinear form for B (odd orthogonal), C
(symplectic) and D (even orthogonal).  The forms are chosen so that the
principal nilpotent is supported on superdiagonals with entries +-1 and the
grading element is an integer diagonal matrix; gradings, root coordinates of
matrix positions, and the splitting of each graded piece into the image of
ad(y) plus a pinned complement are all computed exactly and cached.
"""

from __future__ import annotations

import hashlib
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .errors import MalformedInputError
from .matrices import (
    FracMatrix,
    SeriesMatrix,
    apply_frac,
    fmat_add,
    fmat_comm,
    fmat_inverse,
    fmat_mul,
    fmat_scale,
    fmat_transpose,
    fmat_zero,
    nullspace,
    rref,
    smat_add,
    smat_combine,
    smat_from_frac,
    smat_mul,
    smat_transpose,
    smat_zero,
    solve_exact,
)
from .series import LaurentSeries

FAMILIES = ("A", "B", "C", "D")


def _unit(n: int, i: int, j: int) -> FracMatrix:
    return tuple(
        tuple(Fraction(1) if (a, b) == (i, j) else Fraction(0) for b in range(n))
        for a in range(n)
    )


class LieModel:
    """One classical family at a fixed rank, with all graded structure data.

    Use :func:`model` to obtain (cached) instances.
    """

    def __init__(self, family: str, rank: int):
        if family not in FAMILIES:
            raise MalformedInputError(f"unknown family {family!r}")
        if rank < 1 or (family == "D" and rank < 2):
            raise MalformedInputError(f"rank {rank} out of range for family {family}")
        self.family = family
        self.rank = rank
        self.N = {"A": rank + 1, "B": 2 * rank + 1, "C": 2 * rank, "D": 2 * rank}[family]
        N = self.N

        if family == "A":
            self.J: Optional[FracMatrix] = None
        else:
            sign = (lambda i: Fraction((-1) ** i)) if family in ("B", "C") else (lambda i: Fraction(1))
            self.J = tuple(
                tuple(sign(i) if i + j == N - 1 else Fraction(0) for j in range(N))
                for i in range(N)
            )
            self._Jinv = fmat_inverse(self.J)

        if family == "D":
            half = [Fraction(2 * (rank - i)) for i in range(1, rank + 1)]
            self.hdiag = half + [-x for x in reversed(half)]
        else:
            self.hdiag = [Fraction(N + 1 - 2 * i) for i in range(1, N + 1)]
        if any((a - b) % 2 != 0 for a in self.hdiag for b in self.hdiag):
            raise AssertionError("grading element must have uniform parity")
        self.h = tuple(
            tuple(self.hdiag[i] if i == j else Fraction(0) for j in range(N)) for i in range(N)
        )

        if family == "A":
            self.exponents = list(range(1, rank + 1))
        elif family in ("B", "C"):
            self.exponents = [2 * i - 1 for i in range(1, rank + 1)]
        else:
            self.exponents = sorted([2 * i - 1 for i in range(1, rank)] + [rank - 1])
        self.dmax = max(self.exponents)

        self._init_root_vectors()
        self._init_coweights()
        self._graded: Dict[int, List[FracMatrix]] = {}
        self._extract: Dict[int, Tuple[List[Tuple[int, int]], FracMatrix]] = {}
        self._kostant: Dict[int, dict] = {}

    # -- construction of the principal triple ---------------------------------

    def project(self, X: FracMatrix) -> FracMatrix:
        """Projection onto the model along the form-odd / trace part."""
        if self.family == "A":
            n = self.N
            tr = sum(X[i][i] for i in range(n)) / n
            return tuple(
                tuple(X[i][j] - (tr if i == j else 0) for j in range(n)) for i in range(n)
            )
        theta = fmat_mul(fmat_mul(self._Jinv, fmat_transpose(X)), self.J)
        return tuple(
            tuple((X[i][j] - theta[i][j]) / 2 for j in range(self.N)) for i in range(self.N)
        )

    def _simple_classes(self) -> List[Tuple[int, int]]:
        """Representative matrix position (0-based) of each simple root."""
        N, n = self.N, self.rank
        if self.family in ("A", "B"):
            return [(r, r + 1) for r in range(n)]
        if self.family == "C":
            return [(r, r + 1) for r in range(n)]
        return [(r, r + 1) for r in range(n - 1)] + [(n - 2, n)]

    def _root_vector(self, pos: Tuple[int, int]) -> FracMatrix:
        i, j = pos
        e = self.project(_unit(self.N, i, j))
        c = e[i][j]
        if c == 0:
            raise AssertionError("projection killed a simple root position")
        return tuple(tuple(x / c for x in row) for row in e)

    def _init_root_vectors(self):
        reps = self._simple_classes()
        self.simple_positions = reps
        self.e_vectors = [self._root_vector(p) for p in reps]
        self.f_vectors = [self._root_vector((j, i)) for (i, j) in reps]
        x = fmat_zero(self.N)
        for e in self.e_vectors:
            x = fmat_add(x, e)
        self.x = x
        # y = sum c_r f_r with [x, y] = h; only [e_r, f_r] hits the diagonal
        cols = []
        for e, f in zip(self.e_vectors, self.f_vectors):
            d = fmat_comm(e, f)
            if any(d[i][j] != 0 for i in range(self.N) for j in range(self.N) if i != j):
                raise AssertionError("[e_r, f_r] is not diagonal")
            cols.append([d[i][i] for i in range(self.N)])
        rows = [[cols[r][i] for r in range(self.rank)] for i in range(self.N)]
        coeffs = solve_exact(rows, self.hdiag)
        y = fmat_zero(self.N)
        for c, f in zip(coeffs, self.f_vectors):
            y = fmat_add(y, fmat_scale(c, f))
        self.y = y
        self.y_coeffs = coeffs
        if fmat_comm(self.x, self.y) != self.h:
            raise AssertionError("principal relations failed")

    def _init_coweights(self):
        N, n = self.N, self.rank
        if self.family == "A":
            basis = [[Fraction(1 if i == r else (-1 if i == r + 1 else 0)) for i in range(N)]
                     for r in range(n)]
        else:
            basis = [[Fraction(1 if i == r else (-1 if i == N - 1 - r else 0)) for i in range(N)]
                     for r in range(n)]
        # alpha_s evaluated on a diagonal via its representative position
        def pair(pos, diag):
            return diag[pos[0]] - diag[pos[1]]

        A = [[pair(self.simple_positions[s], basis[r]) for r in range(n)] for s in range(n)]
        self.coweights: List[List[Fraction]] = []
        for r in range(n):
            rhs = [Fraction(1 if s == r else 0) for s in range(n)]
            sol = solve_exact(A, rhs)
            self.coweights.append([sum((sol[t] * basis[t][i] for t in range(n)), Fraction(0))
                                   for i in range(N)])

    # -- gradings ---------------------------------------------------------------

    def grade(self, i: int, j: int) -> int:
        d = self.hdiag[i] - self.hdiag[j]
        return int(d) // 2

    def positions_of_grade(self, d: int) -> List[Tuple[int, int]]:
        return [(i, j) for i in range(self.N) for j in range(self.N) if self.grade(i, j) == d]

    def root_coords(self, i: int, j: int) -> Tuple[int, ...]:
        """Coordinates of the position weight in the simple root basis."""
        out = []
        for w in self.coweights:
            m = w[i] - w[j]
            if m.denominator != 1:
                raise AssertionError("non-integral root coordinate")
            out.append(int(m))
        return tuple(out)

    def graded_basis(self, d: int) -> List[FracMatrix]:
        """Basis of the degree-d part of the model, from the form constraints."""
        if d in self._graded:
            return self._graded[d]
        pos = self.positions_of_grade(d)
        if not pos:
            self._graded[d] = []
            return []
        if self.family == "A":
            cons = [[Fraction(1 if i == j else 0) for (i, j) in pos]] if d == 0 else []
        else:
            cons = []
            for a in range(self.N):
                for b in range(self.N):
                    # entry (a, b) of X^T J + J X, evaluated on X = E_{ij}
                    row = []
                    for (i, j) in pos:
                        v = Fraction(0)
                        if a == j:
                            v += self.J[i][b]
                        if b == j:
                            v += self.J[a][i]
                        row.append(v)
                    if any(x != 0 for x in row):
                        cons.append(row)
        vecs = nullspace(cons) if cons else [
            [Fraction(1 if k == t else 0) for k in range(len(pos))] for t in range(len(pos))
        ]
        basis = []
        for v in vecs:
            m = [[Fraction(0)] * self.N for _ in range(self.N)]
            for (i, j), c in zip(pos, v):
                m[i][j] = c
            basis.append(tuple(tuple(r) for r in m))
        self._graded[d] = basis
        return basis

    def dim_graded(self, d: int) -> int:
        return len(self.graded_basis(d))

    def _extraction(self, d: int):
        """Pivot positions and the rational matrix recovering coordinates."""
        if d in self._extract:
            return self._extract[d]
        basis = self.graded_basis(d)
        pos = self.positions_of_grade(d)
        rows = [[b[i][j] for (i, j) in pos] for b in basis]
        _, pivots = rref(rows)
        ppos = [pos[p] for p in pivots]
        G = tuple(tuple(rows[i][p] for p in pivots) for i in range(len(basis)))
        E = fmat_inverse(fmat_transpose(G))
        self._extract[d] = (ppos, E)
        return ppos, E

    def coords(self, d: int, X: SeriesMatrix) -> List[LaurentSeries]:
        """Coordinates of a degree-d series element in the graded basis."""
        ppos, E = self._extraction(d)
        return apply_frac(E, [X[i][j] for (i, j) in ppos])

    def _coords_frac(self, d: int, X: FracMatrix) -> List[Fraction]:
        ppos, E = self._extraction(d)
        vals = [X[i][j] for (i, j) in ppos]
        return [sum((r * v for r, v in zip(row, vals)), Fraction(0)) for row in E]

    def subdiagonal_coords(self, X: SeriesMatrix) -> List[LaurentSeries]:
        """Coefficients along the simple negative root vectors."""
        return [X[j][i] for (i, j) in self.simple_positions]

    # -- splitting off the image of ad(y) ----------------------------------------

    def _kerx_basis(self, d: int) -> List[FracMatrix]:
        """Basis of (Ker ad x) at degree d, with x pinned first at d = 1."""
        basis_d = self.graded_basis(d)
        basis_up = self.graded_basis(d + 1)
        if basis_up:
            # [x, .] constraints in degree-(d+1) coordinates, one column per vector
            rows = [self._coords_frac(d + 1, fmat_comm(self.x, b)) for b in basis_d]
            cons = [[rows[j][i] for j in range(len(basis_d))]
                    for i in range(len(basis_up))]
            vecs = nullspace(cons)
        else:
            vecs = [[Fraction(1 if k == t else 0) for k in range(len(basis_d))]
                    for t in range(len(basis_d))]
        if d == 1:
            # pin x into the first slot, keeping the rest of the eliminated basis
            xc = self._coords_frac(1, self.x)
            picked = [xc]
            for v in vecs:
                _, pivots = rref(picked + [v])
                if len(pivots) > len(picked):
                    picked.append(v)
            vecs = picked
        out = []
        for v in vecs:
            m = [[Fraction(0)] * self.N for _ in range(self.N)]
            for c, b in zip(v, basis_d):
                if c:
                    for i in range(self.N):
                        for j in range(self.N):
                            if b[i][j]:
                                m[i][j] += c * b[i][j]
            out.append(tuple(tuple(r) for r in m))
        return out

    def kostant_data(self, d: int) -> dict:
        """Inverse of (Z, v) -> [y, Z] + v at degree d, with V = Ker ad x."""
        if d in self._kostant:
            return self._kostant[d]
        basis_d = self.graded_basis(d)
        basis_up = self.graded_basis(d + 1)
        dim = len(basis_d)
        vbasis = self._kerx_basis(d) if d >= 1 else []
        img = [self._coords_frac(d, fmat_comm(self.y, b)) for b in basis_up]
        vcols = [self._coords_frac(d, b) for b in vbasis]
        cols = img + vcols
        if len(cols) != dim:
            raise AssertionError("graded splitting has wrong dimension")
        M = tuple(tuple(cols[j][i] for j in range(dim)) for i in range(dim))
        data = {
            "Minv": fmat_inverse(M),
            "zdim": len(basis_up),
            "vdim": len(vbasis),
            "vbasis": vbasis,
            "basis_up": basis_up,
        }
        mult = sum(1 for e in self.exponents if e == d) if d >= 1 else 0
        if data["vdim"] != mult:
            raise AssertionError("complement dimension disagrees with exponents")
        self._kostant[d] = data
        return data

    def kostant_split(self, d: int, X: SeriesMatrix) -> Tuple[SeriesMatrix, List[LaurentSeries]]:
        """Write a degree-d element as [y, Z] + sum v_i B_i with Z of degree d+1."""
        data = self.kostant_data(d)
        c = self.coords(d, X)
        zv = apply_frac(data["Minv"], c)
        z, v = zv[: data["zdim"]], zv[data["zdim"]:]
        Z = smat_combine(z, data["basis_up"]) if data["zdim"] else smat_zero(self.N)
        return Z, v

    # -- series-level helpers ------------------------------------------------------

    def in_model(self, q: SeriesMatrix) -> bool:
        """All certified coefficients satisfy the defining constraints."""
        if self.family == "A":
            tr = LaurentSeries.zero()
            for i in range(self.N):
                tr = tr + q[i][i]
            return tr.is_zero()
        Js = smat_from_frac(self.J)
        M = smat_add(smat_mul(smat_transpose(q), Js), smat_mul(Js, q))
        return all(x.is_zero() for row in M for x in row)

    def grade_parts(self, q: SeriesMatrix) -> Dict[int, SeriesMatrix]:
        """Split a matrix positionwise by grading; zero entries are dropped."""
        parts: Dict[int, SeriesMatrix] = {}
        for i in range(self.N):
            for j in range(self.N):
                if q[i][j].is_zero():
                    continue
                d = self.grade(i, j)
                if d not in parts:
                    parts[d] = [[LaurentSeries.zero() for _ in range(self.N)]
                                for _ in range(self.N)]
                parts[d][i][j] = q[i][j]
        return parts

    # -- identification -------------------------------------------------------------

    def name(self) -> str:
        return f"{self.family}:{self.rank}"

    def describe(self) -> str:
        return {"A": "sl", "B": "so", "C": "sp", "D": "so"}[self.family] + f"({self.N})"

    def vbasis_fingerprint(self) -> str:
        """Digest pinning the complement bases used in normal forms."""
        parts = [self.name()]
        for d in range(1, self.dmax + 1):
            for b in self.kostant_data(d)["vbasis"]:
                parts.append(f"d{d}:" + ";".join(",".join(str(x) for x in row) for row in b))
        return hashlib.sha256("|".join(parts).encode()).hexdigest()[:16]

    def __eq__(self, other):
        return isinstance(other, LieModel) and (self.family, self.rank) == (other.family, other.rank)

    def __hash__(self):
        return hash((self.family, self.rank))

    def __repr__(self):
        return f"LieModel({self.name()} ~ {self.describe()})"


def invariants(m: LieModel, X: SeriesMatrix) -> List[Tuple[int, LaurentSeries]]:
    """Characteristic coefficients of X, keyed by degree.

    Type A reports degrees 2..N; types B and C the even degrees (the odd ones
    vanish on the algebra and are checked to); type D the even degrees through
    2k-2 plus the determinant in degree 2k, which is the square of the
    (unimplemented) Pfaffian slot.
    """
    N = m.N
    # Faddeev-LeVerrier: exact characteristic coefficients c_1..c_N
    coeffs: List[LaurentSeries] = []
    Mk = smat_zero(N)
    for i in range(N):
        Mk[i][i] = LaurentSeries.one()
    for k in range(1, N + 1):
        acc = smat_mul(X, Mk)
        tr = LaurentSeries.zero()
        for i in range(N):
            tr = tr + acc[i][i]
        ck = tr * Fraction(-1, k)
        coeffs.append(ck)
        Mk = [row[:] for row in acc]
        for i in range(N):
            Mk[i][i] = Mk[i][i] + ck
    if m.family == "A":
        wanted = list(range(2, N + 1))
    elif m.family in ("B", "C"):
        wanted = [k for k in range(2, N + 1) if k % 2 == 0]
    else:
        wanted = [k for k in range(2, N - 1) if k % 2 == 0] + [N]
    if m.family != "A":
        for k in range(1, N + 1):
            if k not in wanted and not coeffs[k - 1].is_zero():
                raise AssertionError(f"degree-{k} coefficient should vanish on {m.name()}")
    return [(k, coeffs[k - 1]) for k in wanted]


_MODELS: Dict[Tuple[str, int], LieModel] = {}


def model(family: str, rank: int) -> LieModel:
    key = (family, rank)
    if key not in _MODELS:
        _MODELS[key] = LieModel(family, rank)
    return _MODELS[key]


def parse_algebra(text: str) -> LieModel:
    """Accept 'A:2' style names and 'sl:3' / 'so:5' / 'sp:4' aliases."""
    try:
        kind, _, num = text.partition(":")
        n = int(num)
    except ValueError:
        raise MalformedInputError(f"cannot parse algebra {text!r}")
    kind = kind.strip()
    if kind in FAMILIES:
        return model(kind, n)
    if kind == "sl":
        if n < 2:
            raise MalformedInputError("sl needs size >= 2")
        return model("A", n - 1)
    if kind == "sp":
        if n < 2 or n % 2:
            raise MalformedInputError("sp needs even size >= 2")
        return model("C", n // 2)
    if kind == "so":
        if n >= 3 and n % 2 == 1:
            return model("B", (n - 1) // 2)
        if n >= 4 and n % 2 == 0:
            return model("D", n // 2)
        raise MalformedInputError("so needs size >= 3")
    raise MalformedInputError(f"unknown algebra kind {kind!r}")
