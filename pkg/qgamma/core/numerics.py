"""
Precision contract shared by every approximate computation.

Two carriers are used:

* ``HPReal`` wraps an ``mpmath.mpf`` value together with an a-priori bound on
  its absolute error and the precision (bits) at which it was produced.
* ``FixedPoint`` is an integer scaled by ``2**bits`` with an integer error bound
  in units of ``2**-bits``. The long summation kernels accumulate in fixed point
  (one floor division per term, one unit of error per inexact division) and
  convert to ``HPReal`` exactly at the end.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, TypeVar

from mpmath import mp, mpf

from qgamma.config import settings
from qgamma.schemas.schema_numerics import PrecisionPlan
from qgamma.util.exceptions import (
    AmbiguousFloor,
    InsufficientPrecision,
    NotNearInteger,
    PrecisionError,
    PrecisionExhausted,
)
from qgamma.util.logger import setup_logger

logger = setup_logger(__name__)

T = TypeVar("T")

MIN_PREC_BITS = 53
# Relative inflation applied to propagated error bounds
ERR_INFLATION = mpf(1) + mpf(2) ** -30


def exact_mpf(n: int) -> mpf:
    """Convert an integer to mpf without rounding."""
    with mp.workprec(max(n.bit_length(), 1) + 1):
        return mpf(n)


def rational_mpf(x: Fraction | int, prec: int) -> tuple[mpf, mpf]:
    """Round a rational to `prec` bits; returns (value, error bound)."""
    x = Fraction(x)
    value = mp.fdiv(x.numerator, x.denominator, prec=prec)
    den = x.denominator
    if den & (den - 1) == 0 and x.numerator.bit_length() <= prec:
        return value, mpf(0)
    return value, _ulp(value, prec)


def _ulp(value: mpf, prec: int) -> mpf:
    if not value:
        return mpf(0)
    magnitude = value if value > 0 else mp.fneg(value, exact=True)
    return mp.ldexp(magnitude, 1 - prec)


@dataclass(frozen=True, slots=True)
class HPReal:
    """Real number known to within ``err`` of ``value``."""

    value: mpf
    err: mpf
    prec: int

    def __post_init__(self) -> None:
        if not (self.err >= 0) or mp.isinf(self.err) or mp.isnan(self.err):
            raise ValueError(f"invalid error bound {self.err}")

    @classmethod
    def exact(cls, x: int | Fraction, prec: int) -> "HPReal":
        if isinstance(x, int) and x.bit_length() <= prec:
            return cls(exact_mpf(x), mpf(0), prec)
        value, err = rational_mpf(Fraction(x), prec)
        return cls(value, err, prec)

    @classmethod
    def zero(cls, prec: int) -> "HPReal":
        return cls(mpf(0), mpf(0), prec)

    def _coerce(self, other: "HPReal | int | Fraction") -> "HPReal":
        if isinstance(other, HPReal):
            return other
        if isinstance(other, (int, Fraction)):
            return HPReal.exact(other, self.prec)
        return NotImplemented

    def __add__(self, other: "HPReal | int | Fraction") -> "HPReal":
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        prec = max(self.prec, other.prec)
        with mp.workprec(prec):
            value = self.value + other.value
            err = (self.err + other.err + _ulp(value, prec)) * ERR_INFLATION
        return HPReal(value, err, prec)

    __radd__ = __add__

    def __neg__(self) -> "HPReal":
        return HPReal(mp.fneg(self.value, exact=True), self.err, self.prec)

    def __sub__(self, other: "HPReal | int | Fraction") -> "HPReal":
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other: "HPReal | int | Fraction") -> "HPReal":
        return (-self) + other

    def __mul__(self, other: "HPReal | int | Fraction") -> "HPReal":
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        prec = max(self.prec, other.prec)
        with mp.workprec(prec):
            value = self.value * other.value
            err = (
                abs(self.value) * other.err
                + abs(other.value) * self.err
                + self.err * other.err
                + _ulp(value, prec)
            ) * ERR_INFLATION
        return HPReal(value, err, prec)

    __rmul__ = __mul__

    def __truediv__(self, other: "HPReal | int | Fraction") -> "HPReal":
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        prec = max(self.prec, other.prec)
        with mp.workprec(prec):
            margin = abs(other.value) - other.err
            if margin <= 0:
                raise InsufficientPrecision(
                    "divisor not bounded away from zero",
                    {"value": str(other.value), "err": str(other.err)},
                )
            value = self.value / other.value
            err = (
                (self.err + abs(value) * other.err) / margin + _ulp(value, prec)
            ) * ERR_INFLATION
        return HPReal(value, err, prec)

    def mul_exact(self, k: int) -> "HPReal":
        """Multiply by an integer without rounding."""
        prec = self.prec + max(k.bit_length(), 1)
        with mp.workprec(prec + MIN_PREC_BITS):
            value = self.value * exact_mpf(k)
            err = self.err * abs(exact_mpf(k))
        return HPReal(value, err, prec)

    def with_error(self, extra: mpf | float | Fraction) -> "HPReal":
        """Widen the error bound by a non-negative amount (e.g. a truncation bound)."""
        with mp.workprec(self.prec):
            if isinstance(extra, Fraction):
                extra = mp.fdiv(extra.numerator, extra.denominator, prec=64) * ERR_INFLATION
            return HPReal(self.value, (self.err + mpf(extra)) * ERR_INFLATION, self.prec)

    def lower(self) -> mpf:
        with mp.workprec(self.prec + 8):
            return self.value - self.err

    def upper(self) -> mpf:
        with mp.workprec(self.prec + 8):
            return self.value + self.err

    def is_positive(self) -> bool:
        """True when the whole error interval lies above zero."""
        return self.value > self.err

    def contains(self, x: "HPReal | mpf | int | Fraction", slack: mpf | float = 0) -> bool:
        """Whether `x` is consistent with this value (both error bounds and `slack` allowed)."""
        prec = self.prec + 64
        with mp.workprec(prec):
            if isinstance(x, HPReal):
                other, other_err = x.value, x.err
            elif isinstance(x, (int, Fraction)):
                other, other_err = rational_mpf(Fraction(x), prec)
            else:
                other, other_err = mpf(x), mpf(0)
            return abs(self.value - other) <= self.err + other_err + mpf(slack)

    def err_log2(self) -> float:
        if not self.err:
            return float("-inf")
        return float(mp.log(self.err, 2))

    def __float__(self) -> float:
        return float(self.value)

    def __repr__(self) -> str:
        return f"HPReal({mp.nstr(self.value, 20)} ± {mp.nstr(self.err, 3)}, prec={self.prec})"


@dataclass(frozen=True, slots=True)
class FixedPoint:
    """``value / 2**bits`` with absolute error at most ``err / 2**bits``."""

    value: int
    err: int
    bits: int

    @classmethod
    def from_fraction(cls, x: Fraction | int, bits: int) -> "FixedPoint":
        x = Fraction(x)
        scaled = x.numerator << bits
        value, rem = divmod(scaled, x.denominator)
        return cls(value, 1 if rem else 0, bits)

    @classmethod
    def from_mpf(cls, x: mpf, err: mpf, bits: int) -> "FixedPoint":
        mag = int(mp.mag(x)) if x else 0
        with mp.workprec(bits + max(mag, 0) + 16):
            value = int(mp.floor(mp.ldexp(x, bits)))
            err_units = int(mp.ceil(mp.ldexp(err, bits))) + 1
        return cls(value, err_units, bits)

    def _check(self, other: "FixedPoint") -> None:
        if other.bits != self.bits:
            raise ValueError(f"fixed-point scales differ: {self.bits} vs {other.bits}")

    def __add__(self, other: "FixedPoint") -> "FixedPoint":
        self._check(other)
        return FixedPoint(self.value + other.value, self.err + other.err, self.bits)

    def __sub__(self, other: "FixedPoint") -> "FixedPoint":
        self._check(other)
        return FixedPoint(self.value - other.value, self.err + other.err, self.bits)

    def __neg__(self) -> "FixedPoint":
        return FixedPoint(-self.value, self.err, self.bits)

    def scale(self, k: int) -> "FixedPoint":
        return FixedPoint(self.value * k, self.err * abs(k), self.bits)

    def divide(self, k: int) -> "FixedPoint":
        """Floor-divide by a positive integer."""
        if k <= 0:
            raise ValueError("divisor must be positive")
        value, rem = divmod(self.value, k)
        return FixedPoint(value, -(-self.err // k) + (1 if rem else 0), self.bits)

    def rescale(self, bits: int) -> "FixedPoint":
        if bits >= self.bits:
            shift = bits - self.bits
            return FixedPoint(self.value << shift, self.err << shift, bits)
        shift = self.bits - bits
        value = self.value >> shift
        return FixedPoint(value, (self.err >> shift) + 2, bits)

    def to_hpreal(self) -> HPReal:
        prec = max(self.value.bit_length(), MIN_PREC_BITS) + 2
        with mp.workprec(prec):
            value = mp.ldexp(exact_mpf(self.value), -self.bits)
        with mp.workprec(max(self.err.bit_length(), MIN_PREC_BITS) + 2):
            err = mp.ldexp(exact_mpf(self.err), -self.bits)
        return HPReal(value, err, max(prec, self.bits))


class FixedSum:
    """Accumulator for ``Σ num/den`` at a fixed binary scale."""

    def __init__(self, bits: int):
        self.bits = bits
        self.total = 0
        self.err = 0
        self.terms = 0

    def add_quotient(self, num: int, den: int) -> int:
        """Add floor(num·2^bits/den); returns the scaled term."""
        term, rem = divmod(num << self.bits, den)
        self.total += term
        if rem:
            self.err += 1
        self.terms += 1
        return term

    def add_fixed(self, x: FixedPoint) -> None:
        if x.bits != self.bits:
            x = x.rescale(self.bits)
        self.total += x.value
        self.err += x.err
        self.terms += 1

    def add_error_units(self, units: int) -> None:
        self.err += units

    def result(self) -> FixedPoint:
        return FixedPoint(self.total, self.err, self.bits)


def fractional_part(x: HPReal) -> HPReal:
    """
    Return ``x - floor(x)`` with the error of ``x`` carried over.

    Raises:
        AmbiguousFloor: If ``x`` lies within its error bound of an integer.
    """
    if x.err >= mpf(1) / 4:
        raise AmbiguousFloor("error bound too large for a fractional part", {"err": str(x.err)})
    prec = max(x.prec, int(mp.mag(x.value)) + MIN_PREC_BITS if x.value else MIN_PREC_BITS)
    with mp.workprec(prec + 8):
        floor = mp.floor(x.value)
        frac = x.value - floor
        distance = min(frac, 1 - frac)
    if x.err > 0 and distance <= x.err:
        raise AmbiguousFloor(
            "value within error bound of an integer",
            {"distance": mp.nstr(distance, 5), "err": mp.nstr(x.err, 5)},
        )
    return HPReal(frac, x.err, x.prec)


def round_to_integer_checked(x: HPReal, slack: HPReal | mpf | float | Fraction) -> int:
    """
    Return the integer n with ``|x - n| <= slack``.

    Raises:
        ValueError: If slack is not below 1/2.
        NotNearInteger: If no integer lies within the slack.
    """
    if isinstance(slack, HPReal):
        slack_value = slack.upper()
    elif isinstance(slack, Fraction):
        slack_value = mp.fdiv(slack.numerator, slack.denominator, prec=64)
    else:
        slack_value = mpf(slack)
    if slack_value >= mpf(1) / 2:
        raise ValueError("slack must be below 1/2")
    prec = max(x.prec, int(mp.mag(x.value)) + MIN_PREC_BITS if x.value else MIN_PREC_BITS)
    with mp.workprec(prec + 8):
        nearest = mp.nint(x.value)
        distance = abs(x.value - nearest) + x.err
    if distance > slack_value:
        raise NotNearInteger(
            "no integer within slack",
            {"value": mp.nstr(x.value, 15), "slack": mp.nstr(slack_value, 5)},
        )
    return int(nearest)


def with_precision_retry(
    fn: Callable[[PrecisionPlan], T],
    plan: PrecisionPlan,
    max_retries: Optional[int] = None,
) -> T:
    """
    Run ``fn(plan)``, doubling ``work_bits`` whenever it raises a PrecisionError.

    Raises:
        PrecisionExhausted: After ``max_retries`` doublings still fail.
    """
    retries = settings.MAX_PRECISION_RETRIES if max_retries is None else max_retries
    current = plan
    for attempt in range(retries + 1):
        try:
            return fn(current)
        except PrecisionError as e:
            if attempt == retries:
                raise PrecisionExhausted(
                    f"precision retries exhausted at {current.work_bits} bits",
                    {"last_error": e.message, "work_bits": current.work_bits, **e.details},
                ) from e
            logger.warning(
                "Raising working precision",
                extra={
                    "data": {
                        "from_bits": current.work_bits,
                        "to_bits": 2 * current.work_bits,
                        "reason": type(e).__name__,
                    }
                },
            )
            current = current.doubled()
    raise AssertionError("unreachable")


def format_fixed(x: HPReal, digits: int) -> str:
    """
    Round ``x`` to ``digits`` decimals.

    Raises:
        InsufficientPrecision: If the error bound is not below 10^-(digits+2).
    """
    if digits < 0:
        raise ValueError("digits must be non-negative")
    with mp.workprec(64):
        limit = mpf(10) ** (-(digits + 2))
    if x.err >= limit:
        raise InsufficientPrecision(
            f"cannot certify {digits} digits",
            {"err": mp.nstr(x.err, 5), "digits": digits},
        )
    mag = int(mp.mag(x.value)) if x.value else 0
    with mp.workprec(max(x.prec, mag + 1) + digits * 4 + 16):
        scaled = int(mp.nint(x.value * mpf(10) ** digits))
    sign = "-" if scaled < 0 else ""
    text = str(abs(scaled)).rjust(digits + 1, "0")
    if digits == 0:
        return sign + text
    return f"{sign}{text[:-digits]}.{text[-digits:]}"


def mpf_to_fraction(x: mpf) -> Fraction:
    """Exact rational value of a finite mpf."""
    if not mp.isfinite(x):
        raise ValueError(f"cannot convert {x} to a fraction")
    sign, man, exp, _ = x._mpf_
    value = Fraction(int(man)) * Fraction(2) ** exp
    return -value if sign else value


def format_scientific(x: Fraction | int | HPReal, significant: int = 4) -> str:
    """Format a positive number as ``d.ddde±k`` (truncated mantissa)."""
    if isinstance(x, HPReal):
        x = mpf_to_fraction(x.value)
    x = Fraction(x)
    if x <= 0:
        raise ValueError("format_scientific expects a positive number")
    exponent = len(str(x.numerator)) - len(str(x.denominator))
    while Fraction(10) ** exponent > x:
        exponent -= 1
    while Fraction(10) ** (exponent + 1) <= x:
        exponent += 1
    mantissa = int(x * Fraction(10) ** (significant - 1 - exponent))
    text = str(mantissa)
    return f"{text[0]}.{text[1:]}e{exponent:+03d}"


def format_hpreal(x: HPReal, significant: int = 40) -> dict[str, str]:
    """Decimal rendering used by JSON records: value plus error exponent."""
    digits = significant
    if x.err:
        with mp.workprec(max(x.prec, 64)):
            rel = x.err / abs(x.value) if x.value else mpf(1)
            certified = int(-mp.log10(rel)) if rel < 1 else 1
        digits = max(1, min(significant, certified))
    with mp.workprec(max(x.prec, 64)):
        value = mp.nstr(x.value, digits, min_fixed=-5, max_fixed=30, strip_zeros=False)
        err = mp.nstr(x.err, 3) if x.err else "0"
    return {"value": value, "err": err}
