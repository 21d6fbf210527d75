"""Series arithmetic: normalization, certified truncation orders, exactness."""

from fractions import Fraction as F

import pytest

from opercalc.errors import InsufficientTruncationError, PreconditionError
from opercalc.series import Density, LaurentSeries, fraction_root

Z = LaurentSeries.monomial(1, 1)


def S(terms, trunc=None):
    return LaurentSeries.from_terms(terms, trunc)


class TestNormalization:
    def test_leading_zeros_raise_valuation(self):
        s = LaurentSeries(-2, [0, 0, 3, 1], None)
        assert s.val == 0 and s.coeffs == (F(3), F(1))

    def test_exact_trailing_zeros_stripped(self):
        s = LaurentSeries(1, [2, 0, 0], None)
        assert s.coeffs == (F(2),) and s.trunc is None

    def test_truncated_keeps_certified_zero_tail(self):
        s = LaurentSeries(0, [1, 0, 0], 3)
        assert s.coeffs == (F(1), F(0), F(0)) and s.trunc == 3

    def test_coeffs_past_trunc_discarded(self):
        s = LaurentSeries(0, [1, 2, 3, 4], 2)
        assert s.coeffs == (F(1), F(2))

    def test_empty_exact_zero(self):
        s = LaurentSeries.zero()
        assert s.val == 0 and s.coeffs == () and s.is_zero()

    def test_empty_truncated_sits_at_trunc(self):
        s = LaurentSeries(0, [0, 0], 2)
        assert s.val == 2 and s.coeffs == () and s.trunc == 2

    def test_storage_invariant(self):
        s = S({0: 1, 3: 5}, trunc=6)
        assert len(s.coeffs) == s.trunc - s.val


class TestCoefficientAccess:
    def test_certified_zero_outside_support(self):
        s = S({2: 7}, trunc=5)
        assert s.coeff(0) == 0 and s.coeff(4) == 0

    def test_past_trunc_raises(self):
        s = S({0: 1}, trunc=3)
        with pytest.raises(InsufficientTruncationError):
            s.coeff(3)

    def test_exact_any_order(self):
        s = S({-1: 2})
        assert s.coeff(10**6) == 0

    def test_unit_detection(self):
        assert S({0: 5, 1: 1}).is_unit()
        assert not S({1: 1}).is_unit()
        with pytest.raises(InsufficientTruncationError):
            S({}, trunc=0).is_unit()


class TestAddMul:
    def test_add_trunc_is_min(self):
        a = S({0: 1, 1: 1, 2: F(1, 2)}, trunc=3)
        b = S({0: 1, 1: -1}, trunc=4)
        assert (a + b).trunc == 3

    def test_mul_relative_precision(self):
        # trunc of a product: min(ta + vb, tb + va)
        a = S({2: 1, 3: 4}, trunc=5)
        b = S({-1: 1}, trunc=6)
        assert (a * b).trunc == min(5 + (-1), 6 + 2)

    def test_mul_exact_times_exact_is_exact(self):
        p = (1 + Z) * (1 - Z)
        assert p == S({0: 1, 2: -1})

    def test_scalar_zero_annihilates(self):
        a = S({0: 1}, trunc=4)
        assert (0 * a).is_exact() and (0 * a).is_zero()

    def test_cancellation_raises_valuation(self):
        a = S({0: 1, 1: 2}, trunc=5)
        b = S({0: 1, 1: 3}, trunc=5)
        d = a - b
        assert d.val == 1 and d.coeff(1) == -1

    def test_int_pow(self):
        assert (1 + Z) ** 3 == S({0: 1, 1: 3, 2: 3, 3: 1})
        assert (Z**-2) == LaurentSeries.monomial(1, -2)


class TestDivision:
    def test_geometric(self):
        one = LaurentSeries.one()
        g = one.div(1 - Z, trunc=6)
        assert g == S({k: 1 for k in range(6)}, trunc=6)

    def test_truncated_divisor_needs_no_hint(self):
        b = S({0: 1, 1: -1}, trunc=4)
        q = LaurentSeries.one() / b
        assert q.trunc == 4 and all(q.coeff(k) == 1 for k in range(4))

    def test_exact_nonmonomial_requires_hint(self):
        with pytest.raises(InsufficientTruncationError):
            LaurentSeries.one().div(1 + Z)

    def test_monomial_division_stays_exact(self):
        s = S({-1: 3, 2: 5})
        q = s / LaurentSeries.monomial(2, 3)
        assert q.is_exact() and q == S({-4: F(3, 2), -1: F(5, 2)})

    def test_valuation_shift_precision(self):
        # dividing by z^2(1+z) certified to z^5 keeps 5 relative orders
        b = S({2: 1, 3: 1}, trunc=7)
        q = LaurentSeries.one() / b
        assert q.val == -2 and q.rel_prec() == 5
        assert (q * b).agrees(LaurentSeries.one())

    def test_zero_divisor(self):
        with pytest.raises(ZeroDivisionError):
            LaurentSeries.one() / LaurentSeries.zero()
        with pytest.raises(InsufficientTruncationError):
            LaurentSeries.one() / LaurentSeries.zero(trunc=3)


class TestRationalPower:
    def test_fraction_root(self):
        assert fraction_root(F(8), F(1, 3)) == 2
        assert fraction_root(F(4, 9), F(1, 2)) == F(2, 3)
        assert fraction_root(F(-27), F(1, 3)) == -3
        assert fraction_root(F(-27), F(2, 3)) == 9
        with pytest.raises(PreconditionError):
            fraction_root(F(2), F(1, 2))
        with pytest.raises(PreconditionError):
            fraction_root(F(-4), F(1, 2))

    def test_cube_equals_fourth_power(self):
        # p = s^(4/3) certified by p^3 == s^4 on the shared window
        s = S({-3: 1, -1: 1})
        p = s.power_rational(F(4, 3), trunc=8)
        assert (p**3).agrees(s**4)

    def test_valuation_must_stay_integral(self):
        with pytest.raises(PreconditionError):
            S({-2: 1}).power_rational(F(4, 3))

    def test_leading_coefficient_must_have_root(self):
        with pytest.raises(PreconditionError):
            S({0: 2, 1: 1}).power_rational(F(1, 2), trunc=4)

    def test_sqrt_squares_back(self):
        s = S({0: 1, 1: 4, 2: -2}, trunc=9)
        r = s.sqrt()
        assert (r * r).agrees(s)

    def test_exact_monomial_power_exact(self):
        p = LaurentSeries.monomial(4, 2).power_rational(F(1, 2))
        assert p.is_exact() and p == LaurentSeries.monomial(2, 1)

    def test_negative_integer_power_via_hint(self):
        s = S({1: 1, 2: 1})
        p = s.power_rational(-2, trunc=3)
        assert p.val == -2 and (p * s * s).agrees(LaurentSeries.one())


class TestCalculus:
    def test_derivative(self):
        s = S({-1: 1, 0: 5, 3: 2})
        assert s.derivative() == S({-2: -1, 2: 6})

    def test_derivative_loses_one_certified_order(self):
        s = S({0: 1, 1: 1}, trunc=5)
        assert s.derivative().trunc == 4

    def test_shift(self):
        s = S({0: 1, 1: 1}, trunc=3)
        t = s.shift(-2)
        assert t.val == -2 and t.trunc == 1


class TestAgrees:
    def test_overlap_only(self):
        a = S({0: 1, 1: 2}, trunc=2)
        b = S({0: 1, 1: 2, 2: 9}, trunc=3)
        assert a.agrees(b) and b.agrees(a)

    def test_exact_vs_truncated(self):
        a = S({0: 1})
        b = S({0: 1}, trunc=4)
        assert a.agrees(b)
        c = S({0: 1, 3: 1})
        assert not c.agrees(b)

    def test_structural_eq_distinguishes_trunc(self):
        assert S({0: 1}, trunc=3) != S({0: 1}, trunc=4)


class TestDensity:
    def test_half_integer_weights(self):
        Density(Z, F(3, 2))
        with pytest.raises(PreconditionError):
            Density(Z, F(1, 3))

    def test_weights_add_under_mul(self):
        a = Density(Z, F(1, 2))
        b = Density(1 + Z, F(3, 2))
        assert (a * b).weight == 2

    def test_add_requires_equal_weight(self):
        with pytest.raises(PreconditionError):
            Density(Z, 1) + Density(Z, 2)

    def test_scalar_action(self):
        d = 3 * Density(Z, 1)
        assert d.series == LaurentSeries.monomial(3, 1) and d.weight == 1
