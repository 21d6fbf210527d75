"""Between scalar operators and flagged matrix connections, family by family.

A flagged system is h*d/dz + q on O^n with q vanishing below the first
subdiagonal and invertible constants on it, so the coordinate flag is a
complete filtration moved one step at a time.  Its scalar operator is read
off through the cyclic vector e_0; the inverse direction builds a companion
matrix.  For the traceless, symplectic and odd orthogonal models the same
read-off runs against the canonical gauge and the inverse direction solves
for canonical densities exponent by exponent.  The even orthogonal model is
not scalar: it is equivalent to a pair (L, f) of a skew operator and a
density, handled by so_even_build / so_even_extract.

Weight conventions: an order-n operator between weights (a, b) requires
b = a + n for the general-linear kind, and the self-dual window
a = (1 - n)/2, b = (1 + n)/2 for the other kinds.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple, Union

from .diffops import DiffOp, PseudoSymbol, compose, pairing, pseudo_invert, to_plain, transpose
from .errors import MalformedInputError, NotAnOperError, PreconditionError
from .gauge import CanonicalForm, GaugeElement, OperConnection, gauge_apply
from .lie import LieModel, model as lie_model
from .matrices import (
    FracMatrix,
    SeriesMatrix,
    fmat_inverse,
    fmat_mul,
    fmat_transpose,
    smat_from_frac,
    smat_mul,
)
from .series import Density, LaurentSeries, Rat, half_integer

ZERO = LaurentSeries.zero()
ONE = LaurentSeries.one()

KIND_FAMILY = {"sl": "A", "sp": "C", "so_odd": "B"}
FAMILY_KIND = {f: k for k, f in KIND_FAMILY.items()}


def _fr(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


# -- flagged systems -------------------------------------------------------------


@dataclass(frozen=True)
class FlaggedSystem:
    """h*d/dz + q on O^n together with the weights of the two edge lines.

    `src` is the density weight carried by the first coordinate line and
    `tgt` = src + n the weight of the top quotient; the scalar operator of
    the system maps weight-src densities to weight-tgt densities.
    """

    matrix: SeriesMatrix
    src: Fraction
    tgt: Fraction
    planck: Fraction

    def __post_init__(self):
        object.__setattr__(self, "src", half_integer(self.src))
        object.__setattr__(self, "tgt", half_integer(self.tgt))
        object.__setattr__(self, "planck", _fr(self.planck))

    @property
    def n(self) -> int:
        return len(self.matrix)

    def validate(self):
        n = self.n
        if n < 1 or any(len(row) != n for row in self.matrix):
            raise MalformedInputError("connection matrix must be square")
        if self.tgt - self.src != n:
            raise PreconditionError(f"edge weights must differ by the size {n}")
        for i in range(n):
            for j in range(n):
                if i > j + 1 and not self.matrix[i][j].is_zero():
                    raise NotAnOperError("matrix has entries below the first subdiagonal")
        for i in range(n - 1):
            a = self.matrix[i + 1][i]
            # constant subdiagonal keeps the coordinate trivializations unambiguous
            if not (a.is_exact() and a.is_monomial() and a.val == 0):
                raise NotAnOperError("subdiagonal entries must be invertible constants")

    def trace(self) -> LaurentSeries:
        out = ZERO
        for i in range(self.n):
            out = out + self.matrix[i][i]
        return out

    def symbol(self) -> LaurentSeries:
        """Product of the subdiagonal entries; the top coefficient of the read-off."""
        out = ONE
        for i in range(self.n - 1):
            out = out * self.matrix[i + 1][i]
        return out

    def truncated(self, trunc: Optional[int]) -> "FlaggedSystem":
        if trunc is None:
            return self
        mat = tuple(tuple(c.truncate(trunc) for c in row) for row in self.matrix)
        return FlaggedSystem(mat, self.src, self.tgt, self.planck)

    def agrees(self, other: "FlaggedSystem") -> bool:
        return (
            (self.src, self.tgt, self.planck) == (other.src, other.tgt, other.planck)
            and self.n == other.n
            and all(
                a.agrees(b)
                for ra, rb in zip(self.matrix, other.matrix)
                for a, b in zip(ra, rb)
            )
        )


def companion_system(op: DiffOp) -> FlaggedSystem:
    """Unit subdiagonal, last column -f_i; requires a monic operator."""
    n = op.order
    if n < 1:
        raise PreconditionError("an operator of positive order is required")
    if op.tgt - op.src != n:
        raise PreconditionError(f"edge weights must differ by the order {n}")
    if not op.coeffs[-1].agrees(ONE):
        raise PreconditionError("principal symbol must be 1")
    rows = [[ZERO] * n for _ in range(n)]
    for i in range(n - 1):
        rows[i + 1][i] = ONE
    for i in range(n):
        rows[i][n - 1] = rows[i][n - 1] - op.coeffs[i]
    return FlaggedSystem(tuple(tuple(r) for r in rows), op.src, op.tgt, op.planck)


def as_flagged(conn: OperConnection) -> FlaggedSystem:
    """Coordinate flag of a matrix connection, with the self-dual edge weights."""
    if conn.model.family == "D":
        raise PreconditionError("the even orthogonal flag has a two-dimensional middle step")
    n = conn.model.N
    a = half_integer(Fraction(1 - n, 2))
    return FlaggedSystem(conn.q, a, a + n, conn.planck)


# -- the cyclic read-off ---------------------------------------------------------


def _apply_nabla(q: SeriesMatrix, h: Fraction,
                 vec: Sequence[LaurentSeries]) -> List[LaurentSeries]:
    out = []
    for i, row in enumerate(q):
        acc = h * vec[i].derivative() if h else ZERO
        for j, c in enumerate(row):
            if not c.is_zero():
                acc = acc + c * vec[j]
        out.append(acc)
    return out


def _flag_readoff(q: SeriesMatrix, h: Fraction, trunc: Optional[int]) -> List[LaurentSeries]:
    """Coefficients c with nabla^n e_0 = sum c_k nabla^k e_0, by back-substitution."""
    n = len(q)
    for i in range(n):
        for j in range(n):
            if i > j + 1 and not q[i][j].is_zero():
                raise NotAnOperError("matrix has entries below the first subdiagonal")
    for i in range(n - 1):
        if not q[i + 1][i].is_unit():
            raise NotAnOperError(f"subdiagonal entry at row {i + 1} is not invertible")
    vs = [[ONE] + [ZERO] * (n - 1)]
    for _ in range(n):
        vs.append(_apply_nabla(q, h, vs[-1]))
    coeffs: List[LaurentSeries] = [ZERO] * n
    for i in range(n - 1, -1, -1):
        num = vs[n][i]
        for m in range(i + 1, n):
            num = num - coeffs[m] * vs[m][i]
        coeffs[i] = num.div(vs[i][i], trunc)
    return coeffs


def diffop_from_oper(obj: Union[OperConnection, FlaggedSystem],
                     kind: Optional[str] = None,
                     trunc: Optional[int] = None) -> DiffOp:
    """Scalar operator of a flagged system or a model connection.

    Model connections give the monic operator in the self-dual weight window
    (invariant under constant torus rescalings and flag-preserving unipotent
    gauges).  Flagged systems keep their declared weights and the coordinate
    symbol: the result is symbol * (monic read-off), so a dualized system
    yields exactly -L^t.
    """
    if isinstance(obj, FlaggedSystem):
        if kind not in (None, "gl"):
            raise PreconditionError("flagged systems carry the general-linear kind")
        obj.validate()
        c = _flag_readoff(obj.matrix, obj.planck, trunc)
        g = obj.symbol()
        cmap = {i: -(g * ck) for i, ck in enumerate(c)}
        cmap[obj.n] = g
        return DiffOp.from_map(cmap, obj.src, obj.tgt, obj.planck)
    model = obj.model
    if model.family == "D":
        raise PreconditionError("even orthogonal opers are not scalar; use so_even_extract")
    expected = FAMILY_KIND[model.family]
    if kind is not None and kind != expected:
        raise PreconditionError(f"model {model.name()} carries kind {expected!r}, not {kind!r}")
    obj = obj.truncated(trunc)
    obj.validate()
    n = model.N
    c = _flag_readoff(obj.q, obj.planck, trunc)
    a = half_integer(Fraction(1 - n, 2))
    cmap: Dict[int, LaurentSeries] = {i: -ck for i, ck in enumerate(c)}
    cmap[n] = ONE
    return DiffOp.from_map(cmap, a, a + n, obj.planck)


# -- building connections from operators ----------------------------------------


def companion_torus(model: LieModel) -> GaugeElement:
    """Constant torus carrying the unit subdiagonal to the canonical coefficients."""
    t = {
        r: LaurentSeries.constant(c)
        for r, c in enumerate(model.y_coeffs)
        if c != 1
    }
    return GaugeElement(model, t, [])


def _require_window(op: DiffOp):
    n = op.order
    a = half_integer(Fraction(1 - n, 2))
    if (op.src, op.tgt) != (a, a + n):
        raise PreconditionError(
            f"the self-dual weight window ({a}, {a + n}) is required, got ({op.src}, {op.tgt})"
        )
    if not op.coeffs[-1].agrees(ONE):
        raise PreconditionError("principal symbol must be 1")


def _constant_of(s: LaurentSeries) -> Fraction:
    if not s.is_exact():
        raise AssertionError("expected an exact series")
    if s.is_zero():
        return Fraction(0)
    if not (s.is_monomial() and s.val == 0):
        raise AssertionError("expected a constant series")
    return s.leading()


def _canonical_readoff(model: LieModel, planck: Fraction,
                       vals: Sequence[LaurentSeries],
                       trunc: Optional[int]) -> List[LaurentSeries]:
    dens = tuple(Density(v, d + 1) for d, v in zip(model.exponents, vals))
    cf = CanonicalForm(model, planck, dens)
    return _flag_readoff(cf.matrix(), planck, trunc)


def verify_flag_pairing(op: DiffOp, trunc: Optional[int] = None):
    """The residue pairing must kill e_i against e_j for i + j < n - 1
    and be invertible on the antidiagonal; raises otherwise."""
    n = op.order
    a = op.src
    h = op.planck
    ops = [DiffOp.from_map({i: ONE}, a, a + i, h) for i in range(n)]
    for i in range(n):
        for j in range(n - 1 - i):
            if not pairing(ops[i], ops[j], op, trunc=trunc).is_zero():
                raise PreconditionError("flag is not self-orthogonal under the residue pairing")
        g = pairing(ops[i], ops[n - 1 - i], op, trunc=trunc)
        if not g.is_unit():
            raise PreconditionError("residue pairing is degenerate on the flag")


def oper_from_diffop(op: DiffOp, kind: str,
                     trunc: Optional[int] = None) -> Union[FlaggedSystem, OperConnection]:
    """Connection of the requested kind whose scalar operator is the input.

    gl: the companion flagged system.  sl: the companion moved to the
    principal gauge by the constant companion torus; requires a vanishing
    subprincipal coefficient.  sp / so_odd: the canonical connection whose
    read-off reproduces the operator; requires L^t = L resp. L^t = -L.
    """
    if kind == "gl":
        if not op.coeffs[-1].agrees(ONE):
            raise PreconditionError("principal symbol must be 1")
        return companion_system(op)
    if kind == "sl":
        return _sl_connection(op, trunc)
    if kind in ("sp", "so_odd"):
        return _selfdual_connection(op, kind, trunc)
    raise MalformedInputError(f"unknown kind {kind!r}")


def _sl_connection(op: DiffOp, trunc: Optional[int]) -> OperConnection:
    n = op.order
    if n < 2:
        raise PreconditionError("the traceless kind needs order at least 2")
    _require_window(op)
    if not op.coeff(n - 1).is_zero():
        raise PreconditionError(
            "subprincipal coefficient must vanish (the companion trace is -f_{n-1})"
        )
    model = lie_model("A", n - 1)
    fs = companion_system(op)
    conn = OperConnection(model, op.planck, fs.matrix)
    conn.validate()
    return gauge_apply(conn, companion_torus(model))


def _selfdual_connection(op: DiffOp, kind: str, trunc: Optional[int]) -> OperConnection:
    n = op.order
    if kind == "sp":
        if n < 2 or n % 2:
            raise PreconditionError("the symplectic kind needs even order")
        model = lie_model("C", n // 2)
        want = op
    else:
        if n < 3 or n % 2 == 0:
            raise PreconditionError("the odd orthogonal kind needs odd order at least 3")
        model = lie_model("B", (n - 1) // 2)
        want = -op
    _require_window(op)
    if not transpose(op).agrees(want):
        sign = "+" if kind == "sp" else "-"
        raise PreconditionError(f"transpose condition L^t = {sign}L fails")
    h = op.planck
    exps = model.exponents
    # slot n-1-d is gamma_d * v_d plus terms in earlier densities only:
    # any other monomial in the v's has weight above d + 1
    gammas: List[Fraction] = []
    for r, d in enumerate(exps):
        probe = [ZERO] * model.rank
        probe[r] = ONE
        g = _constant_of(_canonical_readoff(model, h, probe, None)[n - 1 - d])
        if g == 0:
            raise AssertionError("degenerate canonical slot")
        gammas.append(-g)
    vals: List[LaurentSeries] = [ZERO] * model.rank
    for r, d in enumerate(exps):
        cur = _canonical_readoff(model, h, vals, trunc)[n - 1 - d]
        delta = op.coeff(n - 1 - d) + cur
        vals[r] = (Fraction(1) / gammas[r]) * delta
    final = _canonical_readoff(model, h, vals, trunc)
    for i in range(n):
        if not (-final[i]).agrees(op.coeff(i)):
            raise PreconditionError(
                "operator is not in the image of the canonical connections of this kind"
            )
    verify_flag_pairing(op, trunc=trunc)
    dens = tuple(Density(v, d + 1) for d, v in zip(exps, vals))
    return CanonicalForm(model, h, dens).connection()


# -- duality ---------------------------------------------------------------------


def dualize(obj: Union[FlaggedSystem, OperConnection]) -> FlaggedSystem:
    """Reversed-flag dual; its read-off is -L^t with weights (1-b, 1-a)."""
    fs = obj if isinstance(obj, FlaggedSystem) else as_flagged(obj)
    fs.validate()
    n = fs.n
    q = fs.matrix
    dual = tuple(
        tuple(-q[n - 1 - j][n - 1 - i] for j in range(n)) for i in range(n)
    )
    return FlaggedSystem(dual, 1 - fs.tgt, 1 - fs.src, fs.planck)


# -- residue pairings along the flag ---------------------------------------------


def flag_gram(op: DiffOp, size: Optional[int] = None,
              trunc: Optional[int] = None) -> List[List[LaurentSeries]]:
    """G[i][j] = residue pairing of D^i against D^j through the operator."""
    if op.src + op.tgt != 1:
        raise PreconditionError("the self-dual weight window is required")
    n = op.order if size is None else size
    ops = [DiffOp.from_map({i: ONE}, op.src, op.src + i, op.planck) for i in range(n)]
    return [
        [pairing(u, v, op, trunc=trunc) for v in ops]
        for u in ops
    ]


def gram_horizontal(op: DiffOp, trunc: Optional[int] = None) -> bool:
    """h * dG_ij = G_{i+1,j} + G_{i,j+1} on the extended Gram matrix."""
    n = op.order
    h = op.planck
    g = flag_gram(op, size=n + 1, trunc=trunc)
    for i in range(n):
        for j in range(n):
            lhs = h * g[i][j].derivative() if h else ZERO
            if not lhs.agrees(g[i + 1][j] + g[i][j + 1]):
                return False
    return True


# -- the rank-one bridge ----------------------------------------------------------


def sl2_to_o3(u: Density, planck: Rat = 1) -> Tuple[OperConnection, DiffOp]:
    """Odd orthogonal image of the weight-2 density u.

    Returns the rank-1 orthogonal connection with -2u in the two upper slots
    and the order-3 skew operator D^3 + 4u D + 2h u'; the operator is the
    read-off of the connection.
    """
    if u.weight != 2:
        raise PreconditionError("a weight-2 density is required")
    h = _fr(planck)
    s = u.series
    q = (
        (ZERO, -2 * s, ZERO),
        (ONE, ZERO, -2 * s),
        (ZERO, ONE, ZERO),
    )
    conn = OperConnection(lie_model("B", 1), h, q)
    conn.validate()
    lt = DiffOp.from_map(
        {3: ONE, 1: 4 * s, 0: (2 * h) * s.derivative()}, -1, 2, h
    )
    return conn, lt


# -- the even orthogonal pair ------------------------------------------------------


def _so_even_frames(k: int):
    """Constant frame change between (odd orthogonal) + O and the so(2k) model.

    The middle two-dimensional step is spanned by the odd-model middle vector
    e and the extra line w; with the odd form scaled by eps = (-1)^k the pair
    (e + w, (w - e)/2) is hyperbolic over the rationals for every k.
    """
    if k < 2:
        raise PreconditionError("the even orthogonal pair needs k >= 2")
    mB = lie_model("B", k - 1)
    mD = lie_model("D", k)
    n = 2 * k
    eps = Fraction((-1) ** k)
    cols: List[List[Fraction]] = []
    for j in range(n):
        col = [Fraction(0)] * n
        if j <= k - 2:
            col[j] = Fraction(1)
        elif j == k - 1:
            col[k - 1] = Fraction(1)
            col[n - 1] = Fraction(1)
        elif j == k:
            col[k - 1] = Fraction(-1, 2)
            col[n - 1] = Fraction(1, 2)
        else:
            col[j - 1] = eps * Fraction((-1) ** (n - 1 - j))
        cols.append(col)
    S: FracMatrix = tuple(tuple(cols[j][i] for j in range(n)) for i in range(n))
    form = [[Fraction(0)] * n for _ in range(n)]
    for i in range(n - 1):
        for j in range(n - 1):
            form[i][j] = eps * mB.J[i][j]
    form[n - 1][n - 1] = Fraction(1)
    carried = fmat_mul(fmat_mul(fmat_transpose(S), tuple(map(tuple, form))), S)
    if carried != mD.J:
        raise AssertionError("frame change fails to carry the form")
    return mB, mD, eps, S, fmat_inverse(S)


def so_even_build(op: DiffOp, f: Density,
                  depth: int = 4) -> Tuple[OperConnection, PseudoSymbol]:
    """Even orthogonal connection of the pair (L, f) and its symbol L + f d^-1 f.

    L must be skew of odd order 2k-1 with symbol 1 and f a weight-k density;
    the block connection sends the extra line to f times the first flag line.
    The emitted symbol lives in the plain (planck 1) ring.
    """
    n1 = op.order
    if n1 < 3 or n1 % 2 == 0:
        raise PreconditionError("a skew operator of odd order at least 3 is required")
    k = (n1 + 1) // 2
    if f.weight != k:
        raise PreconditionError(f"the pairing density must have weight {k}, got {f.weight}")
    conn_e = oper_from_diffop(op, "so_odd")
    mB, mD, eps, S, Sinv = _so_even_frames(k)
    n = 2 * k
    rows = [[ZERO] * n for _ in range(n)]
    for i in range(n - 1):
        for j in range(n - 1):
            rows[i][j] = conn_e.q[i][j]
    s = f.series
    rows[0][n - 1] = s
    rows[n - 1][n - 2] = -eps * s
    q = smat_mul(smat_from_frac(Sinv), smat_mul(tuple(map(tuple, rows)), smat_from_frac(S)))
    conn = OperConnection(mD, op.planck, q)
    conn.validate()
    so_even_conditions(conn)
    plain = to_plain(op)
    d_inv = pseudo_invert(DiffOp.from_map({1: ONE}, 0, 1, 1), depth)
    f_in = DiffOp.from_map({0: s}, 1 - k, 1, 1)
    f_out = DiffOp.from_map({0: s}, 0, k, 1)
    symbol = plain.to_symbol() + compose(f_out.to_symbol(), compose(d_inv, f_in))
    return conn, symbol


def so_even_conditions(conn: OperConnection):
    """Flag conditions making an even orthogonal connection an oper.

    The coordinate flag realizes the ranks and the orthocomplement pattern by
    construction; checked are the degree bound, invertible one-dimensional
    steps away from the middle, and the invertible composite through the
    two-dimensional middle step.
    """
    m = conn.model
    if m.family != "D":
        raise PreconditionError("an even orthogonal model is required")
    conn.validate()
    k = m.rank
    q = conn.q
    parts = m.grade_parts(q)
    low = [d for d in parts if d < -1]
    if low:
        raise NotAnOperError(f"connection has components in degree {min(low)} < -1")
    for i in list(range(0, k - 2)) + list(range(k + 1, 2 * k - 1)):
        if not q[i + 1][i].is_unit():
            raise NotAnOperError(f"induced flag map at step {i} is not invertible")
    fork = q[k + 1][k - 1] * q[k - 1][k - 2] + q[k + 1][k] * q[k][k - 2]
    if not fork.is_unit():
        raise NotAnOperError("composite through the middle step is not invertible")


def _j_pair(mat_j: FracMatrix, a: Sequence[LaurentSeries],
            b: Sequence[LaurentSeries]) -> LaurentSeries:
    out = ZERO
    n = len(a)
    for i in range(n):
        for j in range(n):
            c = mat_j[i][j]
            if c:
                out = out + c * (a[i] * b[j])
    return out


def _series_solve(cols: Sequence[Sequence[LaurentSeries]],
                  rhs: Sequence[LaurentSeries],
                  trunc: Optional[int]) -> List[LaurentSeries]:
    """Solve sum_j x_j cols[j] = rhs by elimination on invertible pivots."""
    ncol = len(cols)
    nrow = len(rhs)
    rows = [[cols[j][i] for j in range(ncol)] + [rhs[i]] for i in range(nrow)]
    where: List[int] = []
    used = set()

    def constant(s: LaurentSeries) -> bool:
        return s.is_exact() and s.is_monomial() and s.val == 0

    for j in range(ncol):
        # constant pivots first: dividing by them never costs precision
        p = next((r for r in range(nrow) if r not in used and constant(rows[r][j])), None)
        if p is None:
            p = next((r for r in range(nrow) if r not in used and rows[r][j].is_unit()), None)
        if p is None:
            raise PreconditionError("linear solve found no invertible pivot")
        used.add(p)
        where.append(p)
        prow = rows[p]
        for r in range(nrow):
            if r == p or rows[r][j].is_zero():
                continue
            fac = rows[r][j].div(prow[j], trunc)
            rows[r] = [x - fac * y for x, y in zip(rows[r], prow)]
    for r in range(nrow):
        if r not in used and not rows[r][ncol].is_zero():
            raise PreconditionError("inconsistent linear system")
    return [rows[p][ncol].div(rows[p][j], trunc) for j, p in enumerate(where)]


def so_even_extract(conn: OperConnection,
                    trunc: Optional[int] = None) -> Tuple[DiffOp, Density]:
    """The pair (L, f) of an even orthogonal oper; inverse of so_even_build.

    The kernel line of the middle flag map carries a unique norm-1 section
    (up to sign, pinned by a positive leading middle coordinate); corrections
    below the middle make its image proportional to itself modulo the first
    flag line, the proportionality vanishes, the first-line component is f,
    and the scalar operator of the orthocomplement is L.
    """
    so_even_conditions(conn)
    m = conn.model
    k = m.rank
    n = 2 * k
    conn = conn.truncated(trunc)
    q = conn.q
    h = conn.planck
    mid = [-q[k + 1][k], q[k + 1][k - 1]]
    lam = 2 * (mid[0] * mid[1])
    if not lam.is_unit():
        raise PreconditionError("middle kernel line is isotropic or undetermined")
    mu = lam.sqrt(trunc)
    if mid[0].leading() / mu.leading() < 0:
        mu = -mu
    s: List[LaurentSeries] = [ZERO] * n
    s[k - 1] = mid[0].div(mu, trunc)
    s[k] = mid[1].div(mu, trunc)
    # correction next to the middle, from the proportionality cross term
    delta = _apply_nabla(q, h, s)
    theta = q[k - 1][k - 2] * s[k] - q[k][k - 2] * s[k - 1]
    if not theta.is_unit():
        raise PreconditionError("middle correction is degenerate")
    cross = delta[k - 1] * s[k] - delta[k] * s[k - 1]
    s[k - 2] = -cross.div(theta, trunc)
    # each remaining row determines the next correction through its subdiagonal
    for i in range(k - 2, 0, -1):
        acc = h * s[i].derivative() if h else ZERO
        for j in range(n):
            if j != i - 1 and not q[i][j].is_zero():
                acc = acc + q[i][j] * s[j]
        s[i - 1] = -acc.div(q[i][i - 1], trunc)
    delta = _apply_nabla(q, h, s)
    for i in range(1, n):
        if not delta[i].is_zero():
            raise PreconditionError(
                "distinguished section is not horizontal modulo the first flag line"
            )
    f = Density(delta[0], k)
    j_form = m.J

    def project(vec: List[LaurentSeries]) -> List[LaurentSeries]:
        c = _j_pair(j_form, vec, s)
        if c.is_zero():
            return vec
        return [x - c * y for x, y in zip(vec, s)]

    vs = [project([ONE] + [ZERO] * (n - 1))]
    for _ in range(n - 1):
        vs.append(project(_apply_nabla(q, h, vs[-1])))
    target = vs.pop()
    coeffs = _series_solve(vs + [s], target, trunc)
    if not coeffs[-1].is_zero():
        raise PreconditionError("cyclic relation leaks onto the distinguished section")
    cmap: Dict[int, LaurentSeries] = {i: -c for i, c in enumerate(coeffs[:-1])}
    cmap[n - 1] = ONE
    op = DiffOp.from_map(cmap, 1 - k, k, h)
    if not transpose(op).agrees(-op):
        raise PreconditionError("extracted operator is not skew")
    return op, f
