"""Connections on the formal disc and their normal forms.

A connection h*d/dz + q with q valued in a classical model is acted on by
gauge elements b = t * exp(u_1) * exp(u_2) * ... where t is an adjoint-torus
element given by per-simple-root coordinates and each u_r is homogeneous of
degree r.  The action is q |-> Ad(b^{-1}) q + h * b^{-1} b'; torus elements
act diagonally on root spaces (their matrix form may not exist over Q), each
exponential step through the finite series e^{-ad u}(q) + h*Phi(-ad u)(u')
with Phi(A) = (e^A - 1)/A.

Normalization moves any connection satisfying the transversality/unit
conditions to the unique representative y + sum_d v_d * B_d, one density v_d
of weight d+1 per exponent d.  The same loop with the derivative term
weighted by a series f normalizes f*d/dz + q; an explicit first-order gauge
desingularizes connections divided by a vanishing f.  At h = 0 everything
degenerates to conjugation and the invariants of the normal form give the
spectral data.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import ceil
from typing import Dict, List, Optional, Sequence, Tuple

from .errors import (
    IdentityCheckError,
    NotAnOperError,
    PreconditionError,
)
from .lie import LieModel, invariants
from .matrices import (
    SeriesMatrix,
    smat_add,
    smat_comm,
    smat_derivative,
    smat_from_frac,
    smat_identity,
    smat_is_zero,
    smat_mul,
    smat_scale,
    smat_sub,
    smat_truncate,
    smat_zero,
)
from .series import Density, LaurentSeries

ONE = LaurentSeries.one()


@dataclass(frozen=True)
class OperConnection:
    """h*d/dz + q with q a series matrix in the model."""

    model: LieModel
    planck: Fraction
    q: SeriesMatrix

    def validate(self):
        if not self.model.in_model(self.q):
            raise PreconditionError("connection matrix violates the algebra constraints")

    def truncated(self, trunc: Optional[int]) -> "OperConnection":
        if trunc is None:
            return self
        return OperConnection(self.model, self.planck, smat_truncate(self.q, trunc))


@dataclass(frozen=True)
class GaugeElement:
    """b = t * exp(u_1) * exp(u_2) * ...

    `torus` maps a simple-root index to the coordinate c_alpha = alpha(t);
    missing indices mean 1.  `steps[r-1]` is u_r, homogeneous of degree r
    (trailing entries may be zero matrices).
    """

    model: LieModel
    torus: Dict[int, LaurentSeries] = field(default_factory=dict)
    steps: List[SeriesMatrix] = field(default_factory=list)

    def validate(self):
        for r, c in self.torus.items():
            if not (0 <= r < self.model.rank):
                raise PreconditionError(f"no simple root with index {r}")
            if c.is_zero():
                raise PreconditionError("torus coordinate with no certified leading term")
        for i, u in enumerate(self.steps):
            parts = self.model.grade_parts(u)
            if any(d != i + 1 for d in parts):
                raise PreconditionError(f"step {i + 1} is not homogeneous of degree {i + 1}")
            if not self.model.in_model(u):
                raise PreconditionError(f"step {i + 1} violates the algebra constraints")

    def is_identity(self) -> bool:
        return all(c.agrees(ONE) for c in self.torus.values()) and all(
            smat_is_zero(u) for u in self.steps
        )

    def agrees(self, other: "GaugeElement") -> bool:
        if self.model != other.model:
            return False
        for r in range(self.model.rank):
            if not self.torus.get(r, ONE).agrees(other.torus.get(r, ONE)):
                return False
        n = max(len(self.steps), len(other.steps))
        z = smat_zero(self.model.N)
        for i in range(n):
            a = self.steps[i] if i < len(self.steps) else z
            b = other.steps[i] if i < len(other.steps) else z
            if not all(x.agrees(y) for ra, rb in zip(a, b) for x, y in zip(ra, rb)):
                return False
        return True


def identity_gauge(model: LieModel) -> GaugeElement:
    return GaugeElement(model, {}, [])


@dataclass(frozen=True)
class CanonicalForm:
    """h*d/dz + y + sum v_d * B_d, densities listed in exponent order."""

    model: LieModel
    planck: Fraction
    v: Tuple[Density, ...]

    def __post_init__(self):
        if len(self.v) != self.model.rank:
            raise PreconditionError("one canonical density per exponent is required")
        for d, dens in zip(self.model.exponents, self.v):
            if dens.weight != d + 1:
                raise PreconditionError(
                    f"density for exponent {d} must have weight {d + 1}, got {dens.weight}"
                )

    def matrix(self) -> SeriesMatrix:
        m = self.model
        q = smat_from_frac(m.y)
        slot = 0
        for d in sorted(set(m.exponents)):
            for b in m.kostant_data(d)["vbasis"]:
                q = smat_add(q, smat_scale(self.v[slot].series, smat_from_frac(b)))
                slot += 1
        return q

    def connection(self) -> OperConnection:
        return OperConnection(self.model, self.planck, self.matrix())

    def agrees(self, other: "CanonicalForm") -> bool:
        return (
            self.model == other.model
            and self.planck == other.planck
            and all(a.agrees(b) for a, b in zip(self.v, other.v))
        )


# -- the gauge action -----------------------------------------------------------


def _torus_powers(model: LieModel, torus: Dict[int, LaurentSeries]):
    """Per-root powers c^k needed positionwise, computed once."""
    cache: Dict[Tuple[int, int], LaurentSeries] = {}

    def power(r: int, k: int) -> LaurentSeries:
        if k == 0:
            return ONE
        if (r, k) not in cache:
            c = torus.get(r, ONE)
            cache[(r, k)] = c**k if k > 0 else c.inverse() ** (-k)
        return cache[(r, k)]

    return power


def _apply_torus(model: LieModel, torus: Dict[int, LaurentSeries], q: SeriesMatrix,
                 planck: Fraction, deriv: LaurentSeries) -> SeriesMatrix:
    power = _torus_powers(model, torus)
    out = smat_zero(model.N)
    for i in range(model.N):
        for j in range(model.N):
            s = q[i][j]
            if s.is_zero():
                continue
            for r, m in enumerate(model.root_coords(i, j)):
                if m and (r in torus):
                    s = s * power(r, -m)
            out[i][j] = s
    if planck != 0:
        for r, c in torus.items():
            rate = c.derivative() * c.inverse()
            if rate.is_zero():
                continue
            term = planck * deriv * rate
            for i in range(model.N):
                out[i][i] = out[i][i] + model.coweights[r][i] * term
    return out


def _exp_neg_ad(model: LieModel, u: SeriesMatrix, a: SeriesMatrix) -> SeriesMatrix:
    total = a
    term = a
    for k in range(1, 2 * model.dmax + 4):
        term = smat_scale(Fraction(-1, k), smat_comm(u, term))
        if smat_is_zero(term):
            return total
        total = smat_add(total, term)
    raise AssertionError("nilpotent exponential failed to terminate")


def _phi_neg_ad(model: LieModel, u: SeriesMatrix, w: SeriesMatrix) -> SeriesMatrix:
    total = w
    term = w
    for k in range(1, 2 * model.dmax + 4):
        term = smat_scale(Fraction(-1, k + 1), smat_comm(u, term))
        if smat_is_zero(term):
            return total
        total = smat_add(total, term)
    raise AssertionError("nilpotent exponential failed to terminate")


def _apply_step(model: LieModel, u: SeriesMatrix, q: SeriesMatrix,
                planck: Fraction, deriv: LaurentSeries) -> SeriesMatrix:
    out = _exp_neg_ad(model, u, q)
    if planck != 0:
        du = smat_derivative(u)
        if not smat_is_zero(du):
            out = smat_add(out, smat_scale(planck * deriv, _phi_neg_ad(model, u, du)))
    return out


def gauge_apply(conn: OperConnection, b: GaugeElement,
                deriv: Optional[LaurentSeries] = None) -> OperConnection:
    """Act on the connection; `deriv` replaces d/dz by deriv * d/dz."""
    if b.model != conn.model:
        raise PreconditionError("gauge element belongs to a different model")
    b.validate()
    f = ONE if deriv is None else deriv
    q = conn.q
    if b.torus:
        q = _apply_torus(conn.model, b.torus, q, conn.planck, f)
    for u in b.steps:
        if not smat_is_zero(u):
            q = _apply_step(conn.model, u, q, conn.planck, f)
    return OperConnection(conn.model, conn.planck, q)


# -- composition in the gauge group ----------------------------------------------


def _mat_exp(model: LieModel, u: SeriesMatrix) -> SeriesMatrix:
    total = smat_identity(model.N)
    term = smat_identity(model.N)
    for k in range(1, model.N + 1):
        term = smat_scale(Fraction(1, k), smat_mul(term, u))
        if smat_is_zero(term):
            break
        total = smat_add(total, term)
    return total


def _unipotent_matrix(b: GaugeElement) -> SeriesMatrix:
    w = smat_identity(b.model.N)
    for u in b.steps:
        if not smat_is_zero(u):
            w = smat_mul(w, _mat_exp(b.model, u))
    return w


def _scale_positions(model: LieModel, torus: Dict[int, LaurentSeries], w: SeriesMatrix,
                     sign: int) -> SeriesMatrix:
    """Entrywise adjoint action of the torus element, with exponent sign*m."""
    power = _torus_powers(model, torus)
    out = smat_zero(model.N)
    for i in range(model.N):
        for j in range(model.N):
            s = w[i][j]
            if s.is_zero():
                continue
            for r, m in enumerate(model.root_coords(i, j)):
                if m and (r in torus):
                    s = s * power(r, sign * m)
            out[i][j] = s
    return out


def steps_from_unipotent(model: LieModel, w: SeriesMatrix) -> List[SeriesMatrix]:
    """Peel a unipotent group element into homogeneous exponential steps."""
    steps = []
    for d in range(1, model.dmax + 1):
        diff = smat_sub(w, smat_identity(model.N))
        u = model.grade_parts(diff).get(d, smat_zero(model.N))
        if not model.in_model(u):
            raise PreconditionError("matrix is not in the unipotent group of the model")
        steps.append(u)
        if not smat_is_zero(u):
            w = smat_mul(_mat_exp(model, smat_scale(-1, u)), w)
    if not smat_is_zero(smat_sub(w, smat_identity(model.N))):
        raise PreconditionError("matrix is not in the unipotent group of the model")
    return steps


def gauge_compose(b1: GaugeElement, b2: GaugeElement) -> GaugeElement:
    """The element acting like b1 followed by b2 (the product b1*b2)."""
    if b1.model != b2.model:
        raise PreconditionError("gauge elements belong to different models")
    model = b1.model
    torus: Dict[int, LaurentSeries] = {}
    for r in range(model.rank):
        c = b1.torus.get(r, ONE) * b2.torus.get(r, ONE)
        if not (c.is_exact() and c == ONE):
            torus[r] = c
    # t1 W1 t2 W2 = (t1 t2) (Ad(t2^{-1}) W1) W2, and Ad(t^{-1}) scales a root
    # position by the inverse root value.
    w1 = _unipotent_matrix(b1)
    if b2.torus:
        w1 = _scale_positions(model, b2.torus, w1, -1)
    w = smat_mul(w1, _unipotent_matrix(b2))
    return GaugeElement(model, torus, steps_from_unipotent(model, w))


def gauge_inverse(b: GaugeElement, trunc: Optional[int] = None) -> GaugeElement:
    model = b.model
    torus = {r: c.inverse(trunc=trunc) for r, c in b.torus.items()}
    w = _unipotent_matrix(b)
    # w^{-1} = sum (1 - w)^k, a finite sum for unipotent w
    d = smat_sub(smat_identity(model.N), w)
    inv = smat_identity(model.N)
    term = smat_identity(model.N)
    for _ in range(2 * model.dmax + 4):
        term = smat_mul(term, d)
        if smat_is_zero(term):
            break
        inv = smat_add(inv, term)
    winv = _scale_positions(model, b.torus, inv, +1) if b.torus else inv
    return GaugeElement(model, torus, steps_from_unipotent(model, winv))


# -- normalization -----------------------------------------------------------------


def _oper_subdiagonal(model: LieModel, parts: Dict[int, SeriesMatrix]) -> List[LaurentSeries]:
    low = [d for d in parts if d < -1]
    if low:
        raise NotAnOperError(f"connection has components in degree {min(low)} < -1")
    if -1 not in parts:
        raise NotAnOperError("connection has no degree -1 component")
    return model.subdiagonal_coords(parts[-1])


def normalize(conn: OperConnection, trunc: Optional[int] = None,
              deriv: Optional[LaurentSeries] = None) -> Tuple[GaugeElement, CanonicalForm]:
    """The unique gauge moving the connection to y + sum v_d B_d, and that form."""
    model = conn.model
    f = ONE if deriv is None else deriv
    conn = conn.truncated(trunc)
    conn.validate()
    q = conn.q
    parts = model.grade_parts(q)
    a = _oper_subdiagonal(model, parts)
    torus: Dict[int, LaurentSeries] = {}
    for r, (ar, kr) in enumerate(zip(a, model.y_coeffs)):
        if not ar.is_unit():
            raise NotAnOperError(
                f"coefficient on the negative simple root {r} has no invertible constant term"
            )
        c = LaurentSeries.constant(kr).div(ar, trunc=trunc)
        if not (c.is_exact() and c == ONE):
            torus[r] = c
    if torus:
        q = _apply_torus(model, torus, q, conn.planck, f)
    steps: List[SeriesMatrix] = []
    vout: List[LaurentSeries] = []
    for r in range(1, model.dmax + 2):
        d = r - 1
        x_part = model.grade_parts(q).get(d, smat_zero(model.N))
        z, v = model.kostant_split(d, x_part)
        vout.extend(v)
        if r <= model.dmax:
            u = smat_scale(-1, z)
            steps.append(u)
            if not smat_is_zero(u):
                q = _apply_step(model, u, q, conn.planck, f)
        elif not smat_is_zero(z):
            raise AssertionError("defect left above the top exponent")
    dens = tuple(
        Density(s, Fraction(d + 1)) for d, s in zip(sorted(model.exponents), vout)
    )
    return GaugeElement(model, torus, steps), CanonicalForm(model, conn.planck, dens)


def normalize_singular(f: LaurentSeries, conn: OperConnection,
                       trunc: Optional[int] = None) -> Tuple[GaugeElement, CanonicalForm]:
    """Normal form of f*d/dz + q; the loop is normalize with f-weighted derivatives."""
    if f.is_zero():
        raise PreconditionError("the scaling series vanishes identically")
    if f.val < 0:
        raise PreconditionError("the scaling series must be regular")
    return normalize(conn, trunc=trunc, deriv=f)


# -- singular points ------------------------------------------------------------------


def desingularize(f: LaurentSeries, cf: CanonicalForm,
                  trunc: Optional[int] = None) -> CanonicalForm:
    """Normal form of d/dz + f^{-1}(y + sum v_d B_d), via the explicit gauge.

    The gauge is torus coordinates c_alpha = f for every alpha together with
    the single step (h/2)(f'/f) x; both come from pushing the 2x2 matrix
    [[f, h f'/2], [0, 1]] through the principal embedding.  The result has
    Laurent coefficients when f vanishes at the origin.
    """
    if f.is_zero():
        raise PreconditionError("cannot desingularize by an identically zero series")
    model = cf.model
    h = cf.planck
    finv = f.inverse(trunc=trunc)
    q = smat_scale(finv, cf.matrix())
    conn = OperConnection(model, h, q)
    torus = {r: f for r in range(model.rank)}
    rate = f.derivative() * finv
    u1 = smat_scale(rate * Fraction(h, 2), smat_from_frac(model.x)) if h else smat_zero(model.N)
    b = GaugeElement(model, torus, [u1])
    out = gauge_apply(conn, b)
    parts = model.grade_parts(out.q)
    sub = parts.get(-1)
    if sub is None or not all(
        s.agrees(LaurentSeries.constant(k))
        for s, k in zip(model.subdiagonal_coords(sub), model.y_coeffs)
    ):
        raise IdentityCheckError("desingularizing gauge did not restore the principal part")
    vout: List[LaurentSeries] = []
    for d in range(0, model.dmax + 1):
        z, v = model.kostant_split(d, parts.get(d, smat_zero(model.N)))
        if not smat_is_zero(z):
            raise IdentityCheckError(f"desingularized connection has a defect in degree {d}")
        vout.extend(v)
    dens = tuple(Density(s, Fraction(d + 1)) for d, s in zip(sorted(model.exponents), vout))
    return CanonicalForm(model, h, dens)


def desingularize_componentwise(f: LaurentSeries, cf: CanonicalForm,
                                trunc: Optional[int] = None) -> CanonicalForm:
    """Closed-form version: v_d scales by f^{-d-1}, the x-slot gets the
    h^2 (f''f/2 - f'^2/4) correction.  Cross-check for :func:`desingularize`."""
    model = cf.model
    if model.kostant_data(1)["vdim"] != 1:
        raise PreconditionError("componentwise form needs a one-dimensional degree-1 slot")
    h = cf.planck
    corr = (f.derivative().derivative() * f * Fraction(1, 2)
            - f.derivative() * f.derivative() * Fraction(1, 4)) * (h * h)
    out = []
    slot = 0
    for d in sorted(set(model.exponents)):
        for _ in range(model.kostant_data(d)["vdim"]):
            s = cf.v[slot].series
            if d == 1:
                s = s + corr
            out.append(Density(s * f.power_rational(-d - 1, trunc=trunc), Fraction(d + 1)))
            slot += 1
    return CanonicalForm(model, h, tuple(out))


def classify_singularity(cf: CanonicalForm) -> Tuple[int, List[Tuple[int, int]]]:
    """Least m with pole order of v_d at most (d+1)m, plus the order table."""
    table = []
    m = 0
    for d, dens in zip(cf.model.exponents, cf.v):
        pole = max(0, -dens.series.val) if not dens.series.is_zero() else 0
        table.append((d, pole))
        m = max(m, ceil(Fraction(pole, d + 1)))
    return m, table


# -- distinguished constructions --------------------------------------------------------


def embed_sl2(model: LieModel, planck: Fraction, u: Density,
              etas: Sequence[Density] = ()) -> OperConnection:
    """y - u x + sum eta_d B_d: the canonical connection with v_1 = -u."""
    if u.weight != 2:
        raise PreconditionError("the quadratic coordinate must have weight 2")
    if model.kostant_data(1)["vdim"] != 1:
        raise PreconditionError("embedding needs a one-dimensional degree-1 slot")
    high = [(d, b) for d in sorted(set(model.exponents)) if d > 1
            for b in model.kostant_data(d)["vbasis"]]
    if len(etas) != len(high):
        raise PreconditionError(f"expected {len(high)} higher densities, got {len(etas)}")
    q = smat_add(smat_from_frac(model.y),
                 smat_scale(-1 * u.series, smat_from_frac(model.x)))
    for (d, b), eta in zip(high, etas):
        if eta.weight != d + 1:
            raise PreconditionError(f"density for exponent {d} must have weight {d + 1}")
        q = smat_add(q, smat_scale(eta.series, smat_from_frac(b)))
    return OperConnection(model, planck, q)


def act_quadratic_differential(conn: OperConnection, omega: Density,
                               trunc: Optional[int] = None) -> OperConnection:
    """Shift by a weight-2 density along the connection's own principal part.

    The degree-1 direction is dual to the degree-(-1) part (each simple slot
    scaled by kappa_r / a_r), so a canonical connection is shifted by
    -omega * x exactly and normalization sends v_1 to v_1 - omega always.
    """
    if omega.weight != 2:
        raise PreconditionError("the shift must have weight 2")
    model = conn.model
    a = _oper_subdiagonal(model, model.grade_parts(conn.q))
    q = conn.q
    for ar, kr, e in zip(a, model.y_coeffs, model.e_vectors):
        if not ar.is_unit():
            raise NotAnOperError("shifting needs invertible simple-root coefficients")
        coeff = (-1 * omega.series * kr).div(ar, trunc=trunc)
        q = smat_add(q, smat_scale(coeff, smat_from_frac(e)))
    return OperConnection(model, conn.planck, q)


def hitchin_map(cf: CanonicalForm) -> List[Density]:
    """Invariants of the normal form at h = 0, one weight-k density per degree k."""
    if cf.planck != 0:
        raise PreconditionError("spectral invariants require h = 0")
    return [Density(s, Fraction(k)) for k, s in invariants(cf.model, cf.matrix())]


def moduli_dimension(model: LieModel, genus: int, deg_twist: int) -> Tuple[int, List[Tuple[int, int, int]]]:
    """Global parameter count: sum over exponents d of dim H^0(Omega^{d+1}((d+1)D)).

    Returns the total and rows (exponent, k, contribution).
    """
    if genus < 0 or deg_twist < 0:
        raise PreconditionError("genus and twist degree must be nonnegative")
    table = []
    total = 0
    for d in model.exponents:
        k = d + 1
        if genus == 0:
            dim = max(0, -2 * k + k * deg_twist + 1)
        elif genus == 1:
            dim = 1 if deg_twist == 0 else k * deg_twist
        else:
            dim = (2 * k - 1) * (genus - 1) + k * deg_twist
        table.append((d, k, dim))
        total += dim
    return total, table
