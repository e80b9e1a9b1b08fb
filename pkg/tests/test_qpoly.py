from __future__ import annotations

from fractions import Fraction
from math import gcd

import pytest
from mpmath import mp, mpf

from qgamma.core.linforms import base2_coeffs
from qgamma.core.qpoly import (
    ONE_MINUS_X,
    IntPolynomial,
    a_coeffs,
    b_coeffs,
    chi,
    damping_profile,
    f_poly,
    g_poly,
    maximizer_polynomial,
    qk_polynomial,
    reciprocal_identity_residual,
)
from qgamma.schemas.schema_qpoly import ChiWeight


def test_int_polynomial_basics() -> None:
    p = IntPolynomial([1, 2, 0, 0])
    assert p.coeffs == (1, 2)
    assert p.degree == 1
    assert IntPolynomial().degree == -1
    assert IntPolynomial([0, 0]).is_zero()
    assert (p * p).coeffs == (1, 4, 4)
    assert (p - p).is_zero()
    assert (3 - p).coeffs == (2, -2)
    assert p(Fraction(1, 2)) == 2
    assert (ONE_MINUS_X**3).coeffs == (1, -3, 3, -1)


def test_exact_divide_rejects_remainder() -> None:
    assert (ONE_MINUS_X**2).exact_divide(ONE_MINUS_X) == ONE_MINUS_X
    with pytest.raises(ValueError):
        IntPolynomial([1, 0, 1]).exact_divide(ONE_MINUS_X)
    with pytest.raises(ZeroDivisionError):
        ONE_MINUS_X.exact_divide(IntPolynomial())


def test_sign_changes_skip_zero_coefficients() -> None:
    assert IntPolynomial([1, 0, -1, 0, 1]).sign_changes() == 2
    assert IntPolynomial([5]).sign_changes() == 0


@pytest.mark.parametrize("q", range(2, 11))
def test_g_and_f_identity(q: int) -> None:
    assert ONE_MINUS_X * g_poly(q) + f_poly(q) == IntPolynomial.constant(q)
    assert g_poly(q).coeffs == tuple(range(q - 1, 0, -1))


def test_q1_polynomial() -> None:
    assert qk_polynomial(0).is_zero()
    assert qk_polynomial(1).coeffs == (28, -34, 21, -7, 1)


@pytest.mark.parametrize("k", range(1, 6))
def test_base3_recursion_identity(k: int) -> None:
    residual = ONE_MINUS_X ** (6 * k) - qk_polynomial(k) * f_poly(3) - (-27) ** k
    assert residual.is_zero()
    assert qk_polynomial(k).degree == 6 * k - 2


@pytest.mark.parametrize("k", range(1, 7))
def test_a_coefficients(k: int) -> None:
    coeffs = a_coeffs(k)
    assert len(coeffs) == 6 * k
    assert coeffs[0] == 2 * (1 - (-27) ** k)


def test_b_coefficients_in_base_two_match_the_binomial_suffixes() -> None:
    for m in range(1, 13):
        assert b_coeffs(2, m) == base2_coeffs(m)


@pytest.mark.parametrize("q, m", [(3, 1), (3, 4), (4, 3), (5, 2)])
def test_b_coefficients_reassemble_the_damping(q: int, m: int) -> None:
    coeffs = IntPolynomial(b_coeffs(q, m))
    damping = (ONE_MINUS_X * g_poly(q)) ** m
    # G_q·(D - q^m) = F_q·Σ b_l x^l
    assert g_poly(q) * (damping - q**m) == f_poly(q) * coeffs
    assert len(b_coeffs(q, m)) == m * (q - 1)


def test_maximizer_in_base_two() -> None:
    poly = maximizer_polynomial(2)
    assert poly.coeffs == (2, -3)
    assert poly(Fraction(2, 3)) == 0
    assert damping_profile(2)(Fraction(2, 3)) == Fraction(4, 27)


def test_maximizer_in_base_three() -> None:
    poly = maximizer_polynomial(3)
    assert poly.coeffs == (12, -7, -8)
    with mp.workprec(80):
        root = (-7 + mp.sqrt(49 + 4 * 8 * 12)) / 16
        assert abs(poly(root)) < mpf(10) ** -20
        assert mp.nstr(root, 8) == "0.86304075"


@pytest.mark.parametrize("q", range(2, 21))
def test_maximizer_polynomial_has_one_sign_change(q: int) -> None:
    assert maximizer_polynomial(q).sign_changes() == 1


def test_chi_in_base_two_alternates() -> None:
    assert [chi(2, k).value for k in range(8)] == [1, -1, 1, -1, 1, -1, 1, -1]


def test_chi_in_base_three_matches_cosine_closed_form() -> None:
    assert chi(3, 0).value == 3
    assert chi(3, 1).value == -6
    assert chi(3, 5).value == 27
    with mp.workprec(128):
        for k in range(25):
            closed = 3 ** (mpf(k + 1) / 2) * 2 * mp.cos(mp.pi * (k - 1) / 6)
            assert (-1) ** k * chi(3, k).value == int(mp.nint(closed))


def test_chi_in_base_four_matches_closed_form() -> None:
    assert chi(4, 0).value == 6
    with mp.workprec(128):
        for k in range(25):
            closed = 2 ** (mpf(3 * (k + 1)) / 2 + 1) * mp.cos(mp.pi * (3 * k + 1) / 4) + (-1) ** k * 2 ** (k + 1)
            assert chi(4, k).value == int(mp.nint(closed))


@pytest.mark.parametrize("q", [5, 7, 8])
def test_chi_does_not_depend_on_the_primitive_root(q: int) -> None:
    for k in range(8):
        reference = chi(q, k).value
        for t in range(2, q):
            if gcd(t, q) != 1:
                continue
            assert chi(q, k, t).value == reference


def test_chi_rejects_non_primitive_root() -> None:
    with pytest.raises(ValueError):
        chi(6, 2, 3)


def test_chi_weight_enforces_a_priori_bound() -> None:
    with pytest.raises(ValueError):
        ChiWeight(q=3, k=0, value=10**6, work_bits=96)


@pytest.mark.parametrize("q", range(2, 9))
def test_reciprocal_identity(q: int) -> None:
    assert reciprocal_identity_residual(q) < mpf(10) ** -30
