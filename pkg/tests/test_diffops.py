"""Differential operators, symbol calculus, residues, pairings, kernels.

Composition is checked against the action on densities (which uses only
multiplication and d/dz), the Gram determinants against a from-scratch
Laplace expansion, and the commutator formulas against hand-expanded
products recorded inline.
"""

import random
from fractions import Fraction as F

import pytest

from opercalc.diffops import (
    DiffOp,
    PseudoSymbol,
    compose,
    diffop,
    diffop_from_kernel,
    kernel_from_diffop,
    lie_action,
    lie_derivative,
    pairing,
    pseudo_invert,
    res,
    symbols,
    to_plain,
    transpose,
)
from opercalc.errors import InsufficientTruncationError, PreconditionError
from opercalc.series import Density, LaurentSeries

Z = LaurentSeries.monomial(1, 1)
ONE = LaurentSeries.one()
ZERO = LaurentSeries.zero()


def det_oracle(rows):
    """Laplace expansion along the first row; exact and independent."""
    n = len(rows)
    if n == 1:
        return rows[0][0]
    total = F(0)
    for j in range(n):
        minor = [r[:j] + r[j + 1:] for r in rows[1:]]
        sgn = -1 if j % 2 else 1
        total += sgn * rows[0][j] * det_oracle(minor)
    return total


def rnd_series(rng, lo=0, hi=4):
    terms = {k: F(rng.randint(-4, 4), rng.randint(1, 3)) for k in range(lo, hi)}
    return LaurentSeries.from_terms(terms)


def rnd_op(rng, order, src, tgt, planck=1, unit_lead=False):
    coeffs = {i: rnd_series(rng) for i in range(order)}
    lead = LaurentSeries.constant(rng.choice([1, 2, -1])) if unit_lead \
        else rnd_series(rng) + LaurentSeries.constant(5)
    coeffs[order] = lead
    return DiffOp(order, src, tgt, planck, [coeffs[i] for i in range(order + 1)])


def d_power(n, src, tgt, planck=1):
    return DiffOp.from_map({n: ONE}, src, tgt, planck)


def identity_window(sym):
    """The tracked coefficients of a symbol match the identity operator."""
    ok = sym.coeffs.get(0, ZERO).agrees(ONE)
    for i in range(sym.floor, sym.top + 1):
        if i != 0:
            ok = ok and sym.coeffs.get(i, ZERO).is_zero()
    return ok


class TestDiffOpBasics:
    def test_constructor_checks_lengths_and_lead(self):
        with pytest.raises(PreconditionError):
            DiffOp(2, 0, 0, 1, [ONE, ONE])
        with pytest.raises(PreconditionError):
            DiffOp(1, 0, 0, 1, [Z, ZERO])

    def test_from_map_trims_zero_lead(self):
        L = DiffOp.from_map({3: ZERO, 1: Z, 0: ONE}, 0, 1)
        assert L.order == 1
        assert L.coeff(1) == Z and L.coeff(5) == ZERO

    def test_zero_operator(self):
        L = DiffOp.from_map({}, 0, 0)
        assert L.order == 0 and L.is_zero()

    def test_principal_symbol_weight(self):
        L = d_power(3, F(-1, 2), F(5, 2))
        s = L.principal_symbol()
        assert s.weight == F(5, 2) - F(-1, 2) - 3 and s.series == ONE

    def test_linear_structure(self):
        rng = random.Random(7)
        L = rnd_op(rng, 2, 0, 2)
        M = rnd_op(rng, 3, 0, 2)
        assert (L + M - L).agrees(M)
        assert (2 * L).coeff(2) == 2 * L.coeff(2)
        with pytest.raises(PreconditionError):
            L + rnd_op(rng, 2, 0, 3)
        with pytest.raises(PreconditionError):
            L + rnd_op(rng, 2, 0, 2, planck=F(1, 2))

    def test_apply_weight_check(self):
        L = d_power(1, 0, 1)
        with pytest.raises(PreconditionError):
            L.apply(Density(Z, 1))
        out = L.apply(Density(Z * Z, 0))
        assert out.weight == 1 and out.series == 2 * Z


class TestCompose:
    def test_ring_relation(self):
        # D . z = z D + h
        for h in (1, F(1, 2)):
            D = d_power(1, 0, 0, h)
            zmul = DiffOp.from_map({0: Z}, 0, 0, h)
            out = compose(D, zmul)
            assert out.coeff(1) == Z and out.coeff(0) == LaurentSeries.constant(h)

    def test_planck_zero_is_commutative(self):
        rng = random.Random(11)
        f = DiffOp.from_map({0: rnd_series(rng)}, 0, 0, 0)
        D = d_power(2, 0, 0, 0)
        assert compose(D, f).agrees(compose(f, D))

    def test_against_action_on_densities(self):
        rng = random.Random(13)
        for h in (1, F(1, 2), 0):
            for _ in range(12):
                L = rnd_op(rng, rng.randint(0, 3), 1, 2, h)
                M = rnd_op(rng, rng.randint(0, 3), 0, 1, h)
                phi = Density(rnd_series(rng, 0, 6), 0)
                lhs = compose(L, M).apply(phi)
                rhs = L.apply(M.apply(phi))
                assert lhs.agrees(rhs)

    def test_associative(self):
        rng = random.Random(17)
        for _ in range(8):
            L = rnd_op(rng, 2, 2, 3)
            M = rnd_op(rng, 1, 1, 2)
            N = rnd_op(rng, 2, 0, 1)
            assert compose(compose(L, M), N).agrees(compose(L, compose(M, N)))

    def test_weights_must_chain(self):
        with pytest.raises(PreconditionError):
            compose(d_power(1, 0, 1), d_power(1, 0, 2))
        with pytest.raises(PreconditionError):
            compose(d_power(1, 0, 1, 1), d_power(1, 0, 0, F(1, 2)))


class TestTranspose:
    def test_first_order(self):
        D = d_power(1, F(-1, 2), F(3, 2))
        t = transpose(D)
        assert t.agrees(DiffOp.from_map({1: -ONE}, F(-1, 2), F(3, 2)))
        assert (t.src, t.tgt) == (1 - F(3, 2), 1 - F(-1, 2))

    def test_second_order_by_hand(self):
        # (D^2 + a D + b)^t = D^2 - a D + (b - h a')
        rng = random.Random(19)
        for h in (1, F(1, 3)):
            a, b = rnd_series(rng), rnd_series(rng)
            L = DiffOp.from_map({2: ONE, 1: a, 0: b}, 0, 2, h)
            t = transpose(L)
            assert t.coeff(2) == ONE
            assert t.coeff(1) == -a
            assert t.coeff(0).agrees(b - h * a.derivative())

    def test_involution(self):
        rng = random.Random(23)
        for _ in range(10):
            L = rnd_op(rng, rng.randint(0, 4), F(-1, 2), F(3, 2), F(1, 2))
            assert transpose(transpose(L)).agrees(L)

    def test_antihomomorphism(self):
        rng = random.Random(29)
        for _ in range(10):
            L = rnd_op(rng, 2, 1, 2)
            M = rnd_op(rng, 2, 0, 1)
            assert transpose(compose(L, M)).agrees(
                compose(transpose(M), transpose(L))
            )


class TestSymbols:
    def test_principal_and_defect(self):
        rng = random.Random(31)
        a, b = rnd_series(rng), rnd_series(rng)
        L = DiffOp.from_map({2: ONE, 1: a, 0: b}, F(-1, 2), F(3, 2))
        prin, defect = symbols(L)
        assert prin.series == ONE and prin.weight == 0
        assert defect.coeff(1).agrees(2 * a)
        assert defect.coeff(0).agrees(a.derivative())
        assert defect.coeff(2).is_zero()

    def test_defect_detects_subprincipal_term(self):
        u = Z * Z
        L = DiffOp.from_map({2: ONE, 0: u}, F(-1, 2), F(3, 2))
        _, defect = symbols(L)
        assert defect.is_zero()

    def test_odd_order_skew_form(self):
        u = Z
        L = DiffOp.from_map(
            {3: ONE, 1: 4 * u, 0: 2 * u.derivative()}, -1, 2
        )
        _, defect = symbols(L)
        assert defect.is_zero()


class TestPseudoSymbols:
    def test_range_validation(self):
        with pytest.raises(PreconditionError):
            PseudoSymbol(0, 1, 0, 0, 1, {})
        with pytest.raises(PreconditionError):
            PseudoSymbol(0, -2, 0, 0, 1, {-3: ONE})

    def test_floor_access(self):
        s = PseudoSymbol(0, -2, 0, 0, 1, {-1: Z})
        assert s.coeff(-1) == Z and s.coeff(-2).is_zero()
        with pytest.raises(InsufficientTruncationError):
            s.coeff(-3)
        exact = d_power(1, 0, 1).to_symbol()
        assert exact.coeff(-5).is_zero()

    def test_invert_plain_power(self):
        Q = pseudo_invert(d_power(2, F(-1, 2), F(3, 2)), 3)
        assert Q.top == -2 and Q.floor == -5
        assert Q.coeffs == {-2: ONE}

    def test_invert_two_sided(self):
        rng = random.Random(37)
        for _ in range(6):
            n = rng.randint(1, 3)
            L = rnd_op(rng, n, 0, n, unit_lead=True)
            Q = pseudo_invert(L, 4)
            assert identity_window(compose(L, Q))
            assert identity_window(compose(Q, L))

    def test_invert_needs_unit_lead(self):
        L = DiffOp.from_map({1: Z, 0: ONE}, 0, 1)
        with pytest.raises(PreconditionError):
            pseudo_invert(L, 2)

    def test_invert_exact_lead_needs_truncation(self):
        L = DiffOp.from_map({1: ONE + Z}, 0, 1)
        with pytest.raises(InsufficientTruncationError):
            pseudo_invert(L, 2)
        Q = pseudo_invert(L, 2, trunc=8)
        assert identity_window(compose(L, Q))

    def test_residue(self):
        s = PseudoSymbol(-1, -2, F(3, 2), F(-1, 2), 1, {-1: Z}, False)
        out = res(s)
        assert out.series == Z and out.weight == F(-1, 2) - F(3, 2) + 1
        assert res(d_power(2, 0, 2)).series.is_zero()
        shallow = PseudoSymbol(2, 0, 0, 0, 1, {0: ONE}, False)
        with pytest.raises(InsufficientTruncationError):
            res(shallow)


class TestPairing:
    def test_hill_values(self):
        rng = random.Random(41)
        for _ in range(5):
            u = rnd_series(rng)
            L = DiffOp.from_map({2: ONE, 0: u}, F(-1, 2), F(3, 2))
            one = DiffOp.from_map({0: ONE}, F(-1, 2), F(3, 2))
            D = d_power(1, F(-1, 2), F(3, 2))
            assert pairing(one, D, L) == LaurentSeries.constant(-1)
            assert pairing(one, one, L).is_zero()
            assert pairing(D, one, L) == ONE
            assert pairing(D, D, L).is_zero()

    def test_depth_too_small_refused(self):
        L = d_power(2, F(-1, 2), F(3, 2))
        D = d_power(1, F(-1, 2), F(3, 2))
        with pytest.raises(InsufficientTruncationError):
            pairing(D, D, L, depth=0)

    def gram(self, n):
        L = d_power(n, F(1 - n, 2), F(1 + n, 2))
        basis = [d_power(i, F(1 - n, 2), F(1 + n, 2)) for i in range(n)]
        rows = []
        for u in basis:
            row = []
            for v in basis:
                val = pairing(u, v, L)
                assert val.is_exact() and (val.is_zero() or val.is_monomial())
                row.append(val.coeff(0))
            rows.append(row)
        return rows

    def test_gram_antidiagonal_pattern(self):
        rows = self.gram(3)
        for i in range(3):
            for j in range(3):
                want = F((-1) ** j) if i + j == 2 else F(0)
                assert rows[i][j] == want

    def test_gram_determinant_is_one_for_odd_order(self):
        assert det_oracle(self.gram(3)) == 1
        assert det_oracle(self.gram(5)) == 1


class TestLieDerivative:
    def test_action_requires_vector_field(self):
        with pytest.raises(PreconditionError):
            lie_action(Density(Z, 1), 0)
        with pytest.raises(PreconditionError):
            lie_action(Density(Z, -1), 0, planck=0)

    def test_second_order_flat_case(self):
        # [v, D^2] = g'''/2 between the weights of a square root
        rng = random.Random(43)
        g = rnd_series(rng, 0, 6)
        L = d_power(2, F(-1, 2), F(3, 2))
        out = lie_derivative(L, Density(g, -1))
        ddd = g.derivative().derivative().derivative()
        assert out.agrees(DiffOp.from_map({0: F(1, 2) * ddd}, F(-1, 2), F(3, 2)))

    def test_second_order_with_potential(self):
        # [v, D^2 + u] = 2 u g' + u' g + g'''/2, expanded by hand
        rng = random.Random(47)
        for _ in range(6):
            u, g = rnd_series(rng, 0, 5), rnd_series(rng, 0, 5)
            L = DiffOp.from_map({2: ONE, 0: u}, F(-1, 2), F(3, 2))
            out = lie_derivative(L, Density(g, -1))
            want = (2 * u * g.derivative() + u.derivative() * g
                    + F(1, 2) * g.derivative().derivative().derivative())
            assert out.agrees(DiffOp.from_map({0: want}, F(-1, 2), F(3, 2)))

    def test_leibniz_over_composition(self):
        rng = random.Random(53)
        for h in (1, F(1, 2)):
            v = Density(rnd_series(rng, 0, 5), -1)
            L = rnd_op(rng, 2, 1, 2, h)
            M = rnd_op(rng, 1, 0, 1, h)
            lhs = lie_derivative(compose(L, M), v)
            rhs = compose(lie_derivative(L, v), M) + compose(L, lie_derivative(M, v))
            assert lhs.agrees(rhs)


class TestKernels:
    def test_second_order_kernel_values(self):
        rng = random.Random(59)
        u = rnd_series(rng, 0, 6)
        L = DiffOp.from_map({2: ONE, 0: u}, F(-1, 2), F(3, 2))
        K = kernel_from_diffop(L)
        assert K.weights() == (F(3, 2), F(3, 2))
        assert (K.mmin, K.mmax) == (-3, -1)
        assert K.coeff(-3) == ONE
        assert K.coeff(-2).is_zero()
        assert K.coeff(-1).agrees(F(1, 2) * u)
        lifted = K.symmetrize_lift(-1, 1)
        assert lifted.coeff(0).agrees(F(1, 4) * u.derivative())

    def test_third_order_kernel_values(self):
        rng = random.Random(61)
        u = rnd_series(rng, 0, 6)
        L = DiffOp.from_map(
            {3: ONE, 1: 4 * u, 0: 2 * u.derivative()}, -1, 2
        )
        K = kernel_from_diffop(L)
        assert K.weights() == (2, 2)
        assert K.coeff(-4) == ONE
        assert K.coeff(-3).is_zero()
        assert K.coeff(-2).agrees(F(2, 3) * u)
        assert K.coeff(-1).agrees(F(1, 3) * u.derivative())
        K.symmetrize_lift(1, 1)  # symmetric across the diagonal

    def test_round_trip(self):
        rng = random.Random(67)
        for h in (1, F(1, 3)):
            for _ in range(6):
                L = rnd_op(rng, rng.randint(1, 4), F(-1, 2), F(3, 2), h)
                back = diffop_from_kernel(kernel_from_diffop(L))
                assert back.agrees(to_plain(L))

    def test_swap_matches_negated_transpose(self):
        rng = random.Random(71)
        for _ in range(6):
            L = rnd_op(rng, 3, F(-1, 2), F(3, 2))
            lhs = kernel_from_diffop(L).swap()
            rhs = kernel_from_diffop(-transpose(L))
            assert lhs.agrees(rhs)

    def test_kernel_range_check(self):
        from opercalc.kernels import BiKernel

        with pytest.raises(PreconditionError):
            diffop_from_kernel(BiKernel(1, 1, -2, 0, {-2: ONE}))

    def test_to_plain_is_a_morphism(self):
        rng = random.Random(73)
        h = F(2, 3)
        L = rnd_op(rng, 2, 1, 2, h)
        M = rnd_op(rng, 2, 0, 1, h)
        assert to_plain(compose(L, M)).agrees(compose(to_plain(L), to_plain(M)))

    def test_to_plain_at_zero_keeps_multiplication_part(self):
        L = DiffOp.from_map({2: ONE, 0: Z}, 0, 0, 0)
        flat = to_plain(L)
        assert flat.order == 0 and flat.coeff(0) == Z
