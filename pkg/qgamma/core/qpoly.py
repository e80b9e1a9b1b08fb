"""
Integer polynomials used by the linear forms: F_q, G_q, the base-3 recursion
Q_k, the coefficient vectors a_{j,k} and b_{l,m,q}, the damping profile f_q,
and the integer weights χ_q(k).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

from mpmath import mp, mpc, mpf

from qgamma.core.numerics import HPReal, round_to_integer_checked, with_precision_retry
from qgamma.schemas.schema_numerics import PrecisionPlan
from qgamma.schemas.schema_qpoly import ChiWeight, chi_bound_log2
from qgamma.util.exceptions import IntegralityFailure, NotNearInteger

CHI_SLACK = Fraction(1, 10**6)
CHI_BASE_BITS = 64 + 32
# (1 - x)^6 Q_k recursion constant 28 - 34x + 21x^2 - 7x^3 + x^4
Q1_COEFFS = (28, -34, 21, -7, 1)


def _strip(coeffs: Iterable[int]) -> tuple[int, ...]:
    coeffs = list(coeffs)
    while coeffs and coeffs[-1] == 0:
        coeffs.pop()
    return tuple(coeffs)


@dataclass(frozen=True, slots=True)
class IntPolynomial:
    """Dense integer polynomial, coefficients in ascending degree."""

    coeffs: tuple[int, ...]

    def __init__(self, coeffs: Sequence[int] = ()):
        object.__setattr__(self, "coeffs", _strip(int(c) for c in coeffs))

    @classmethod
    def constant(cls, c: int) -> "IntPolynomial":
        return cls((c,))

    @classmethod
    def monomial(cls, degree: int, c: int = 1) -> "IntPolynomial":
        return cls((0,) * degree + (c,))

    @property
    def degree(self) -> int:
        """Degree; -1 for the zero polynomial."""
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    def __getitem__(self, e: int) -> int:
        if e < 0:
            raise IndexError("negative exponent")
        return self.coeffs[e] if e < len(self.coeffs) else 0

    def padded(self, length: int) -> list[int]:
        """Coefficient list of exactly `length` entries."""
        if self.degree >= length:
            raise ValueError(f"degree {self.degree} does not fit in {length} entries")
        return list(self.coeffs) + [0] * (length - len(self.coeffs))

    def __add__(self, other: "IntPolynomial | int") -> "IntPolynomial":
        if isinstance(other, int):
            other = IntPolynomial.constant(other)
        size = max(len(self.coeffs), len(other.coeffs))
        return IntPolynomial([self[i] + other[i] for i in range(size)])

    __radd__ = __add__

    def __neg__(self) -> "IntPolynomial":
        return IntPolynomial([-c for c in self.coeffs])

    def __sub__(self, other: "IntPolynomial | int") -> "IntPolynomial":
        if isinstance(other, int):
            other = IntPolynomial.constant(other)
        return self + (-other)

    def __rsub__(self, other: int) -> "IntPolynomial":
        return IntPolynomial.constant(other) - self

    def __mul__(self, other: "IntPolynomial | int") -> "IntPolynomial":
        if isinstance(other, int):
            return IntPolynomial([c * other for c in self.coeffs])
        if self.is_zero() or other.is_zero():
            return IntPolynomial()
        result = [0] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a:
                for j, b in enumerate(other.coeffs):
                    result[i + j] += a * b
        return IntPolynomial(result)

    __rmul__ = __mul__

    def __pow__(self, exponent: int) -> "IntPolynomial":
        if exponent < 0:
            raise ValueError("negative exponent")
        result = IntPolynomial.constant(1)
        base = self
        while exponent:
            if exponent & 1:
                result = result * base
            exponent >>= 1
            if exponent:
                base = base * base
        return result

    def exact_divide(self, divisor: "IntPolynomial") -> "IntPolynomial":
        """
        Quotient of an exact division.

        Raises:
            ValueError: If the division leaves a remainder or is not integral.
        """
        if divisor.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        remainder = list(self.coeffs)
        lead = divisor.coeffs[-1]
        d = divisor.degree
        quotient = [0] * max(len(remainder) - d, 0)
        for i in range(len(remainder) - 1, d - 1, -1):
            coeff = remainder[i]
            if coeff == 0:
                continue
            q, r = divmod(coeff, lead)
            if r:
                raise ValueError("division is not integral")
            quotient[i - d] = q
            for j, c in enumerate(divisor.coeffs):
                remainder[i - d + j] -= q * c
        if any(remainder):
            raise ValueError("division leaves a remainder")
        return IntPolynomial(quotient)

    def __call__(self, x):
        """Horner evaluation at an int, Fraction, mpf or mpc."""
        result = 0
        for c in reversed(self.coeffs):
            result = result * x + c
        return result

    def sign_changes(self) -> int:
        """Sign changes in the coefficient sequence (Descartes)."""
        signs = [c > 0 for c in self.coeffs if c]
        return sum(1 for a, b in zip(signs, signs[1:]) if a != b)

    def abs_sum(self) -> int:
        return sum(abs(c) for c in self.coeffs)


ONE_MINUS_X = IntPolynomial((1, -1))


def f_poly(q: int) -> IntPolynomial:
    """F_q(x) = 1 + x + ... + x^(q-1)."""
    if q < 2:
        raise ValueError(f"q must be >= 2, got {q}")
    return IntPolynomial([1] * q)


def g_poly(q: int) -> IntPolynomial:
    """G_q(x) = (q - F_q(x)) / (1 - x) = (q-1) + (q-2)x + ... + x^(q-2)."""
    return (q - f_poly(q)).exact_divide(ONE_MINUS_X)


@lru_cache(maxsize=64)
def qk_polynomial(k: int) -> IntPolynomial:
    """Q_0 = 0, Q_{k+1} = (1-x)^6 Q_k + (-3)^(3k)(28 - 34x + 21x^2 - 7x^3 + x^4)."""
    if k < 0:
        raise ValueError(f"k must be >= 0, got {k}")
    if k == 0:
        return IntPolynomial()
    previous = qk_polynomial(k - 1)
    return ONE_MINUS_X**6 * previous + IntPolynomial(Q1_COEFFS) * (-3) ** (3 * (k - 1))


def a_coeffs(k: int) -> list[int]:
    """a_{0,k}..a_{6k-1,k}: coefficients of (2 + x)·Q_k(x)."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    return (g_poly(3) * qk_polynomial(k)).padded(6 * k)


def baseq_coefficient_polynomial(q: int, m: int) -> IntPolynomial:
    """
    G_q(x)·Σ_{j=1}^m (-1)^j C(m,j) q^(m-j) F_q(x)^(j-1), computed as the exact
    quotient G_q·((q - F_q)^m - q^m) / F_q.
    """
    if q < 2 or m < 1:
        raise ValueError(f"need q >= 2 and m >= 1, got q={q}, m={m}")
    damping = (ONE_MINUS_X**m) * (g_poly(q) ** m)
    return (g_poly(q) * (damping - q**m)).exact_divide(f_poly(q))


def b_coeffs(q: int, m: int) -> list[int]:
    """b_{0,m,q}..b_{m(q-1)-1,m,q}."""
    return baseq_coefficient_polynomial(q, m).padded(m * (q - 1))


def damping_profile(q: int) -> IntPolynomial:
    """f_q(x) = (q - F_q(x))·x^(q(q-1))."""
    return (q - f_poly(q)) * IntPolynomial.monomial(q * (q - 1))


def maximizer_polynomial(q: int) -> IntPolynomial:
    """q(q-1)^2 - Σ_{ν=1}^{q-1} (q(q-1)+ν) x^ν, whose root in (0,1) maximizes f_q."""
    return IntPolynomial(
        [q * (q - 1) ** 2] + [-(q * (q - 1) + nu) for nu in range(1, q)]
    )


def chi_work_bits(q: int, k: int) -> int:
    base = max(q, math.ceil(q / (2 * math.sin(math.pi / q))))
    return CHI_BASE_BITS + (k + 1) * math.ceil(math.log2(base))


def _chi_numeric(q: int, k: int, t: int, plan: PrecisionPlan) -> ChiWeight:
    bits = plan.work_bits
    with mp.workprec(bits):
        roots = [mp.expjpi(mpf(2 * t * j) / q) for j in range(q)]
        total = mpc(0)
        for l in range(1, q):
            product = mpc(1)
            for j in range(1, q):
                if j != l:
                    product *= 1 - roots[j]
            total += roots[(k * l) % q] * product ** (k + 1)
        magnitude = mp.ldexp(mpf(1), math.ceil(chi_bound_log2(q, k)) + 1)
        err = magnitude * (q + 2) * (k + 2) * mp.ldexp(mpf(1), -bits + 4)
        real = HPReal(total.real, err, bits)
        imag = abs(total.imag)
    try:
        value = round_to_integer_checked(real, CHI_SLACK)
    except NotNearInteger as e:
        raise IntegralityFailure(
            f"χ_{q}({k}) not certified as an integer", {"q": q, "k": k, **e.details}
        ) from e
    if imag > err + mpf(CHI_SLACK.numerator) / CHI_SLACK.denominator:
        raise IntegralityFailure(
            f"χ_{q}({k}) has a non-vanishing imaginary part",
            {"q": q, "k": k, "imag": mp.nstr(imag, 5)},
        )
    return ChiWeight(q=q, k=k, value=value, work_bits=bits)


@lru_cache(maxsize=None)
def chi(q: int, k: int, t: int = 1) -> ChiWeight:
    """
    χ_q(k) = Σ_{l=1}^{q-1} ε^(kl) Π_{j≠l} (1 - ε^j)^(k+1) with ε = exp(2πit/q).

    Evaluated in complex floating point and certified by checked rounding.

    Raises:
        ValueError: If t is not coprime to q.
        PrecisionExhausted: If the value cannot be certified after retries.
    """
    if q < 2 or k < 0:
        raise ValueError(f"need q >= 2 and k >= 0, got q={q}, k={k}")
    if math.gcd(t, q) != 1:
        raise ValueError(f"t={t} is not coprime to q={q}")
    plan = PrecisionPlan.for_bits(chi_work_bits(q, k))
    return with_precision_retry(lambda p: _chi_numeric(q, k, t, p), plan)


def reciprocal_identity_residual(q: int, bits: int = 128) -> mpf:
    """max_l |1/(1-ε^l) - (1/q)·Π_{j≠l}(1-ε^j)| over l = 1..q-1."""
    with mp.workprec(bits):
        roots = [mp.expjpi(mpf(2 * j) / q) for j in range(q)]
        worst = mpf(0)
        for l in range(1, q):
            product = mpc(1)
            for j in range(1, q):
                if j != l:
                    product *= 1 - roots[j]
            worst = max(worst, abs(1 / (1 - roots[l]) - product / q))
        return worst
