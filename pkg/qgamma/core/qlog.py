"""
q-logarithm ln_q(1+z) = Σ_{ν≥1} (-1)^(ν-1) z^ν/(q^ν - 1).

Two routes are provided. The defining series converges like (|z|/q)^ν; the
accelerated route z·Σ_{ν≥1} 1/(q^ν + z) converges like q^-ν for every z and is
the one used for L-parts. Both accumulate in the fixed-point kernel and carry
a rigorous truncation bound.
"""

import math
from fractions import Fraction
from typing import Iterable, List, Optional, Tuple

from mpmath import mp

from qgamma.core.numerics import FixedPoint, FixedSum, HPReal
from qgamma.schemas.schema_numerics import PrecisionPlan
from qgamma.schemas.schema_qlog import QLogRequest
from qgamma.tasks.pool import ordered_map
from qgamma.util.exceptions import DomainError
from qgamma.util.logger import setup_logger

logger = setup_logger(__name__)


def _log2(x: Fraction) -> float:
    return math.log2(x.numerator) - math.log2(x.denominator)


def _check_domain(q: Fraction, z: Fraction) -> None:
    if abs(z) >= q:
        raise DomainError(
            f"|z| must be below q for ln_q(1+z), got q={q}, z={z}",
            {"q": str(q), "z": str(z)},
        )


def _geometric_terms_needed(x0: Fraction, ratio: Fraction, scale: Fraction, bits: int) -> int:
    """
    Smallest N >= 0 with scale·x_N/(1 - x_N)·2^bits < 1, where x_N = x0·ratio^N.

    Estimated in floating point, then settled by exact comparison.
    """

    def small_enough(N: int) -> bool:
        x = x0 * ratio**N
        return x < 1 and scale * x / (1 - x) * 2**bits < 1

    log_ratio = _log2(ratio)
    estimate = (bits + _log2(scale) + 1 + _log2(x0)) / -log_ratio
    N = max(0, math.ceil(estimate))
    while not small_enough(N):
        N += 1
    while N > 0 and small_enough(N - 1):
        N -= 1
    return N


def qlog_series_fixed(q: Fraction, z: Fraction, bits: int) -> FixedPoint:
    """Defining series, truncated once the geometric tail is below one unit."""
    q, z = Fraction(q), Fraction(z)
    _check_domain(q, z)
    if z == 0:
        return FixedPoint(0, 0, bits)
    x = abs(z) / q
    # tail after N terms <= x^(N+1)·(q/(q-1))/(1-x)
    N = _geometric_terms_needed(x, x, q / (q - 1), bits)
    a, b = z.numerator, z.denominator
    qn, qd = q.numerator, q.denominator
    acc = FixedSum(bits)
    a_pow, b_pow, qn_pow, qd_pow = 1, 1, 1, 1
    for nu in range(1, N + 1):
        a_pow *= a
        b_pow *= b
        qn_pow *= qn
        qd_pow *= qd
        num = a_pow * qd_pow if nu % 2 else -a_pow * qd_pow
        acc.add_quotient(num, b_pow * (qn_pow - qd_pow))
    acc.add_error_units(1)
    return acc.result()


def qlog_accel_fixed(
    q: int, z: Fraction, bits: int, n_direct: Optional[int] = None
) -> FixedPoint:
    """
    z·Σ_{ν=1}^N 1/(q^ν + z) plus the remainder r_N.

    N is the smallest index whose remainder bound (q/(q-1))·x/(1-x),
    x = |z|/q^(N+1), is below one unit. With `n_direct` < N the remainder
    r_N = ln_q(1 + z/q^n_direct) is summed by the defining series instead.
    """
    z = Fraction(z)
    _check_domain(Fraction(q), z)
    if z == 0:
        return FixedPoint(0, 0, bits)
    N = _geometric_terms_needed(
        abs(z) / q, Fraction(1, q), Fraction(q, q - 1), bits
    )
    direct = N if n_direct is None else min(n_direct, N)
    a, b = z.numerator, z.denominator
    acc = FixedSum(bits)
    q_pow = 1
    for _ in range(direct):
        q_pow *= q
        acc.add_quotient(a, b * q_pow + a)
    if direct == N:
        acc.add_error_units(1)
    else:
        acc.add_fixed(qlog_series_fixed(Fraction(q), z / q_pow, bits))
    return acc.result()


def qlog_series(req: QLogRequest) -> HPReal:
    """ln_q(1+z) from the defining series; rational q accepted when the request allows it."""
    return qlog_series_fixed(req.q, req.z, req.plan.work_bits).to_hpreal()


def qlog_accel(req: QLogRequest) -> HPReal:
    """ln_q(1+z) via z·Σ 1/(q^ν + z)."""
    return qlog_accel_fixed(req.int_q, req.z, req.plan.work_bits).to_hpreal()


def _check_tail_args(q: int, n: int, k: int) -> None:
    if q < 2 or n < 0:
        raise ValueError(f"need q >= 2 and n >= 0, got q={q}, n={n}")
    if k < 0 or k >= q ** (n + 1):
        raise DomainError(
            f"tail index k={k} outside 0 <= k < q^(n+1) = {q ** (n + 1)}",
            {"q": q, "n": n, "k": k},
        )


def tail_sum_fixed(q: int, n: int, k: int, bits: int) -> FixedPoint:
    """Σ_{ν>n} 1/(q^ν + k) = (1/k)·ln_q(1 + k/q^n); closed form for k = 0."""
    _check_tail_args(q, n, k)
    if k == 0:
        return FixedPoint.from_fraction(Fraction(1, q**n * (q - 1)), bits)
    return qlog_accel_fixed(q, Fraction(k, q**n), bits).divide(k)


def tail_sum(q: int, n: int, k: int, plan: PrecisionPlan) -> HPReal:
    return tail_sum_fixed(q, n, k, plan.work_bits).to_hpreal()


def _tail_sum_job(args: Tuple[int, int, int, int]) -> FixedPoint:
    q, n, k, bits = args
    return tail_sum_fixed(q, n, k, bits)


def tail_sum_table(q: int, n: int, ks: Iterable[int], bits: int) -> List[FixedPoint]:
    """tail_sum_fixed for every k, in input order; large batches go to the worker pool."""
    ks = list(ks)
    logger.debug(
        "Evaluating q-logarithm tails",
        extra={"data": {"q": q, "n": n, "count": len(ks), "bits": bits}},
    )
    return ordered_map(_tail_sum_job, [(q, n, k, bits) for k in ks])


def log_fixed(q: int, bits: int) -> FixedPoint:
    """log q in fixed point."""
    with mp.workprec(bits + q.bit_length() + 16):
        value = mp.log(q)
        err = mp.ldexp(mp.mpf(1), -(bits + 8))
    return FixedPoint.from_mpf(value, err, bits)
