"""
Series for Euler's constant.

* Vacca's series and its base-q generalization (σ weights, ⌊log_q n⌋ numerators),
* the base-2 double series,
* Gosper's accelerated series of positive rationals,
* the χ-weighted accelerated base-q series and the periodic-sign kernel
  behind it,
* the generalized constants γ_{j,q}.
"""

import math
from fractions import Fraction
from functools import lru_cache
from math import comb

from mpmath import mp, mpf

from qgamma.core.numerics import FixedPoint, FixedSum, HPReal
from qgamma.core.numtheory import floor_log, sigma
from qgamma.core.qpoly import chi
from qgamma.schemas.schema_numerics import PrecisionPlan
from qgamma.schemas.schema_series import SeriesEstimate, SeriesMethod
from qgamma.util.exceptions import DomainError, QGammaError
from qgamma.util.logger import setup_logger

logger = setup_logger(__name__)

GAMMA_INTRO_DIGITS = "0.57721566490153286060651209008240243104215933593992"
GAMMA_INTRO = Fraction(GAMMA_INTRO_DIGITS)

# 2 sin(π/q) > 1 exactly for q <= 5
MAX_ACCEL_BASE = 5
PARTIAL_SUM_BITS = 128


def _tail_estimate(
    fixed: FixedPoint, tail: Fraction, terms: int, method: SeriesMethod
) -> SeriesEstimate:
    value = fixed.to_hpreal().with_error(tail)
    return SeriesEstimate(
        value=value,
        terms_used=terms,
        tail_bound=HPReal.exact(tail, 64),
        method=method,
    )


def _unit_estimate(
    fixed: FixedPoint, tail_units: int, terms: int, method: SeriesMethod
) -> SeriesEstimate:
    """Estimate whose tail is already counted in `fixed.err` as `tail_units` units."""
    tail = HPReal(mp.ldexp(mpf(tail_units), -fixed.bits), mpf(0), 64)
    return SeriesEstimate(
        value=fixed.to_hpreal(), terms_used=terms, tail_bound=tail, method=method
    )


def vacca_partial(N: int, bits: int = PARTIAL_SUM_BITS) -> SeriesEstimate:
    """Σ_{n=1}^N (-1)^n ⌊log_2 n⌋/n with N rounded up to an even number."""
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    N += N % 2
    acc = FixedSum(bits)
    e, next_pow = 0, 2
    for n in range(1, N + 1):
        if n == next_pow:
            e += 1
            next_pow <<= 1
        if e:
            acc.add_quotient(e if n % 2 == 0 else -e, n)
    tail = Fraction(floor_log(2, N) + 2, N)
    return _tail_estimate(acc.result(), tail, N, SeriesMethod.VACCA)


def baseq_vacca_partial(q: int, N: int, bits: int = PARTIAL_SUM_BITS) -> SeriesEstimate:
    """Σ_{n=1}^N σ_{n,q} ⌊log_q n⌋/n with N rounded up to a multiple of q."""
    if q < 2 or N < 1:
        raise ValueError(f"need q >= 2 and N >= 1, got q={q}, N={N}")
    N = -(-N // q) * q
    acc = FixedSum(bits)
    e, next_pow = 0, q
    for n in range(1, N + 1):
        if n == next_pow:
            e += 1
            next_pow *= q
        if e:
            acc.add_quotient(sigma(n, q) * e, n)
    tail = Fraction(q * (floor_log(q, N) + 2), N)
    return _tail_estimate(acc.result(), tail, N, SeriesMethod.BASEQ_VACCA)


def double_series_partial(V: int, bits: int = PARTIAL_SUM_BITS) -> SeriesEstimate:
    """
    Σ_{ν=1}^V Σ_{κ=0}^{2^(V+1)-2^ν-1} (-1)^κ/(2^ν+κ).

    The κ-ranges make this exactly the Vacca partial sum over n < 2^(V+1).
    """
    if V < 1:
        raise ValueError(f"V must be >= 1, got {V}")
    top = 1 << (V + 1)
    acc = FixedSum(bits)
    for nu in range(1, V + 1):
        start = 1 << nu
        for kappa in range(top - start):
            acc.add_quotient(-1 if kappa % 2 else 1, start + kappa)
    tail = Fraction(2 * V + 4, top)
    return _tail_estimate(acc.result(), tail, acc.terms, SeriesMethod.DOUBLE)


def gosper_outer_term(nu: int) -> Fraction:
    """2^-(ν+1) Σ_{κ=1}^{ν-1} 1/C(2^(ν-κ)+κ, κ), exactly."""
    if nu < 2:
        raise ValueError(f"outer index starts at 2, got {nu}")
    inner = sum(
        (Fraction(1, comb((1 << (nu - kappa)) + kappa, kappa)) for kappa in range(1, nu)),
        Fraction(0),
    )
    return inner / (1 << (nu + 1))


def gosper_gamma(plan: PrecisionPlan) -> SeriesEstimate:
    """
    γ = 1/2 + Σ_{s≥1} Σ_{κ≥1} 1/(2^(s+κ+1)·C(2^s+κ, κ)), with s = ν - κ.

    Consecutive κ-terms shrink by more than 1/2, so each run is cut at the
    first term below half a unit; a block over s is at most twice its first term.
    """
    bits = plan.work_bits
    acc = FixedSum(bits)
    acc.add_quotient(1, 2)
    unit_limit = 2 << bits
    s = 1
    while True:
        pow_s = 1 << s
        first_den = (1 << (s + 2)) * (pow_s + 1)
        # blocks from s on sum to at most (8/3)·first term
        if 8 << bits < 3 * first_den:
            break
        binom = 1
        kappa = 1
        while True:
            binom = binom * (pow_s + kappa) // kappa
            den = (1 << (s + kappa + 1)) * binom
            if unit_limit < den:
                break
            acc.add_quotient(1, den)
            kappa += 1
        acc.add_error_units(1)
        s += 1
    acc.add_error_units(1)
    logger.debug(
        "Gosper series summed", extra={"data": {"bits": bits, "runs": s - 1, "terms": acc.terms}}
    )
    return _unit_estimate(acc.result(), s, acc.terms, SeriesMethod.GOSPER)


@lru_cache(maxsize=16)
def reference_gamma(bits: int) -> HPReal:
    """
    γ to at least `bits` fraction bits from Gosper's series, checked against
    the 50 published digits.
    """
    plan = PrecisionPlan.for_bits(bits + 16, term_count_hint=max(bits * bits, 2))
    value = gosper_gamma(plan).value
    if not value.contains(GAMMA_INTRO, slack=mpf(10) ** -50):
        raise QGammaError(
            "reference γ disagrees with the published digits",
            {"bits": bits, "value": mp.nstr(value.value, 55)},
        )
    return value


def chi_ratio_log2(q: int) -> float:
    """log2(q/(2 sin(π/q))), rounded up."""
    if q == 2:
        return 0.0
    return math.log2(q / (2 * math.sin(math.pi / q))) + 1e-12


def _accel_weight(q: int, k: int) -> int:
    """(-1)^k χ_q(k)."""
    if q == 2:
        return 1
    value = chi(q, k).value
    return -value if k % 2 else value


def _check_accel_base(q: int) -> None:
    if not 2 <= q <= MAX_ACCEL_BASE:
        raise DomainError(
            f"χ-weighted series converge only for 2 <= q <= {MAX_ACCEL_BASE}, got q={q}",
            {"q": q},
        )


def periodic_sign_terms(q: int, m: int, M: int, acc: FixedSum) -> int:
    """
    Add Σ_{t≥0} σ_{t,q} R_m(M+t) to `acc`, with R_j(x) = 1/(x·C(x+j, j)).

    The sum is taken through Σ_k (-1)^k χ_q(k) R_{m+k}(M)/q^(k+1), cut once
    the geometric bound of the remainder falls below half a unit. Returns the
    number of terms added.
    """
    _check_accel_base(q)
    if m < 0 or M < 1:
        raise ValueError(f"need m >= 0 and M >= 1, got m={m}, M={M}")
    log2_q = math.log2(q)
    log2_ratio = chi_ratio_log2(q) - log2_q
    log2_tail_factor = -math.log2(1 - 2**log2_ratio)
    binom = comb(M + m, m)
    q_pow = q
    k = 0
    while True:
        den_core = M * binom
        # |term_k| <= (q-1)·(B/q)^(k+1)/(M·C), B = q/(2 sin(π/q))
        bound_log2 = (
            math.log2(q - 1)
            + (k + 1) * log2_ratio
            - (den_core.bit_length() - 1)
            + acc.bits
            + log2_tail_factor
        )
        if bound_log2 < -1:
            break
        acc.add_quotient(_accel_weight(q, k), q_pow * den_core)
        k += 1
        q_pow *= q
        binom = binom * (M + m + k) // (m + k)
    acc.add_error_units(1)
    return k


def periodic_sign_sum(q: int, m: int, M: int, bits: int) -> FixedPoint:
    """Σ_{t≥0} σ_{t,q} R_m(M+t) in fixed point."""
    acc = FixedSum(bits)
    periodic_sign_terms(q, m, M, acc)
    return acc.result()


def _outer_tail_log2(q: int, nu: int) -> float:
    """log2 of a bound for Σ_{ν'≥ν} Σ_{t≥0} σ_t R_0(q^ν'+t)."""
    log2_ratio = chi_ratio_log2(q) - math.log2(q)
    r = 2**log2_ratio
    return math.log2(r / (1 - r)) + (1 - nu) * math.log2(q)


def baseq_accel_gamma(q: int, plan: PrecisionPlan) -> SeriesEstimate:
    """
    γ = Σ_{ν≥1} Σ_{k≥0} (-1)^k χ_q(k)/(q^(ν+k+1)·C(q^ν+k, k)).

    For q = 2 every weight is 1 and this is Gosper's untriangularized series.

    Raises:
        DomainError: For q > 5, where the k-series stops contracting.
    """
    _check_accel_base(q)
    bits = plan.work_bits
    acc = FixedSum(bits)
    terms = 0
    nu = 1
    while _outer_tail_log2(q, nu) + bits >= -1:
        terms += periodic_sign_terms(q, 0, q**nu, acc)
        nu += 1
    acc.add_error_units(1)
    logger.debug(
        "Accelerated base-q series summed",
        extra={"data": {"q": q, "bits": bits, "outer": nu - 1, "terms": terms}},
    )
    return _unit_estimate(acc.result(), nu, terms, SeriesMethod.BASEQ_ACCEL)


def gamma_jq(q: int, j: int, plan: PrecisionPlan, offset: int = 0) -> SeriesEstimate:
    """
    Generalized constant γ_{j,q} = Σ_{ν≥1} Σ_{t≥0} σ_{t,q}/(q^ν + j + t).

    The first `offset` inner terms are summed directly; the rest is grouped in
    aligned blocks of q terms and summed in closed form through digamma,
    Σ_{t≥s} σ_t/(M+t) = -(1/q)·Σ_{r<q} σ_{s+r}·ψ((M+s+r)/q).
    Each inner sum is at most (q-1)/q^ν, so the ν-tail after V is q^-V.
    """
    if q < 2 or not 0 <= j < q:
        raise ValueError(f"need q >= 2 and 0 <= j < q, got q={q}, j={j}")
    if offset < 0:
        raise ValueError(f"offset must be non-negative, got {offset}")
    bits = plan.work_bits
    V = math.ceil((bits + 1) / math.log2(q))
    prec = bits + 32
    with mp.workprec(prec):
        total = mpf(0)
        for nu in range(1, V + 1):
            M = q**nu + j
            for t in range(offset):
                total += mpf(sigma(t, q)) / (M + t)
            block = mpf(0)
            for r in range(q):
                block += sigma(offset + r, q) * mp.digamma(mpf(M + offset + r) / q)
            total -= block / q
        rounding = mp.ldexp(mpf(V * (offset + 2 * q + 2) * (bits + 2)), -(prec - 4))
    tail = Fraction(1, q**V)
    value = HPReal(total, rounding, prec).with_error(tail)
    return SeriesEstimate(
        value=value,
        terms_used=V * (offset + q),
        tail_bound=HPReal.exact(tail, 64),
        method=SeriesMethod.GAMMA_JQ,
    )
