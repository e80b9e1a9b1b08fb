"""
Analytic bounds behind the linear forms, checked numerically.

Each check returns a BoundCheck (or a RateReport for decay rates); nothing
here raises on a failed inequality, the caller decides what a failure means.
"""

import math
from fractions import Fraction
from math import comb, factorial
from typing import Callable, List, Optional, Tuple, Union

from mpmath import mp, mpf

from qgamma.core.linforms import i_base2_oracle, i_base3_oracle, i_baseq_oracle, i_damped_oracle
from qgamma.core.numerics import HPReal
from qgamma.core.qpoly import damping_profile, maximizer_polynomial
from qgamma.schemas.schema_bounds import BoundCheck, RateFamily, RateReport
from qgamma.schemas.schema_gamma import GammaMethod, predicted_error_log10
from qgamma.schemas.schema_linforms import FormRoute
from qgamma.schemas.schema_numerics import PrecisionPlan
from qgamma.util.exceptions import DomainError, RangeError
from qgamma.util.logger import setup_logger

logger = setup_logger(__name__)

Real = Union[int, Fraction, str]

R0_BRACKET = (4, 8)
POINTWISE_GRID = 1000
SHOWN_DIGITS = 15


def _fmt(x: Union[HPReal, mpf, Fraction, int]) -> str:
    if isinstance(x, HPReal):
        x = x.value
    if isinstance(x, (Fraction, int)):
        x = mp.fdiv(Fraction(x).numerator, Fraction(x).denominator, prec=80)
    with mp.workprec(80):
        return mp.nstr(x, SHOWN_DIGITS)


def _as_fraction(r: Real) -> Fraction:
    r = Fraction(r)
    if r <= 0:
        raise DomainError(f"r must be positive, got {r}", {"r": str(r)})
    return r


def rho(r: Real, bits: int = 128) -> HPReal:
    """ρ(r) = r^r/(r+1)^(r+1); exact for integer r."""
    r = _as_fraction(r)
    if r.denominator == 1:
        a = r.numerator
        return HPReal.exact(Fraction(a**a, (a + 1) ** (a + 1)), bits)
    with mp.workprec(bits + 16):
        x = mpf(r.numerator) / r.denominator
        value = mp.exp(x * mp.log(x) - (x + 1) * mp.log(x + 1))
        return HPReal(value, mp.ldexp(value, 8 - bits), bits)


def log_rho(r: Real) -> float:
    """r log r - (r+1) log(r+1), the base-2 decay constant."""
    x = float(_as_fraction(r))
    return x * math.log(x) - (x + 1) * math.log(x + 1)


def rho_power(r: Fraction, m: int, bits: int = 128) -> HPReal:
    """ρ(r)^m; exact when rm is an integer."""
    a = r * m
    if a.denominator == 1:
        a = a.numerator
        return HPReal.exact(Fraction(a**a * m**m, (a + m) ** (a + m)), bits)
    with mp.workprec(bits + 16):
        x = mpf(r.numerator) / r.denominator
        value = mp.exp(m * (x * mp.log(x) - (x + 1) * mp.log(x + 1)))
        return HPReal(value, mp.ldexp(value, 8 - bits), bits)


def _bisect(f: Callable[[mpf], mpf], lo: mpf, hi: mpf, tol: mpf) -> Tuple[mpf, mpf]:
    """Shrink [lo, hi] around the sign change of f until narrower than tol."""
    f_lo, f_hi = f(lo), f(hi)
    if f_lo == 0 or f_hi == 0 or (f_lo > 0) == (f_hi > 0):
        raise DomainError(
            "bisection bracket has no sign change",
            {"lo": mp.nstr(lo, 10), "hi": mp.nstr(hi, 10)},
        )
    rising = f_lo < 0
    while hi - lo > tol:
        mid = (lo + hi) / 2
        value = f(mid)
        if value == 0:
            return mid, mid
        if (value < 0) == rising:
            lo = mid
        else:
            hi = mid
    return lo, hi


def _r0_equation(r: mpf) -> mpf:
    # log(ρ(r)^(2/r)) + 1
    return 2 * (r * mp.log(r) - (r + 1) * mp.log(r + 1)) / r + 1


def solve_r0(plan: PrecisionPlan) -> HPReal:
    """Root of ρ(r)^(2/r) = 1/e on [4, 8]."""
    bits = plan.work_bits
    with mp.workprec(bits + 32):
        lo, hi = _bisect(_r0_equation, mpf(R0_BRACKET[0]), mpf(R0_BRACKET[1]), mp.ldexp(1, -(bits // 2)))
        return HPReal((lo + hi) / 2, (hi - lo) / 2, bits)


def r0_residual(r0: HPReal) -> mpf:
    """|ρ(r0)^(2/r0) - 1/e|."""
    with mp.workprec(r0.prec + 32):
        r = r0.value
        return abs(mp.exp(_r0_equation(r) - 1) - mp.exp(-1))


def x_q_maximizer(q: int, plan: PrecisionPlan) -> Tuple[HPReal, HPReal]:
    """
    The root x_q in (0,1) of the maximizer polynomial, and f_q(x_q).

    Raises:
        DomainError: If q < 2.
    """
    if q < 2:
        raise DomainError(f"q must be >= 2, got {q}", {"q": q})
    bits = plan.work_bits
    poly = maximizer_polynomial(q)
    profile = damping_profile(q)
    with mp.workprec(bits + 32):
        lo, hi = _bisect(poly, mpf(0), mpf(1), mp.ldexp(1, -(bits // 2)))
        x = HPReal((lo + hi) / 2, (hi - lo) / 2, bits)
        f_lo, f_hi, f_mid = profile(lo), profile(hi), profile(x.value)
        f_err = max(abs(f_mid - f_lo), abs(f_mid - f_hi)) + mp.ldexp(1, -bits)
        return x, HPReal(f_mid, f_err, bits)


def check_rho_values() -> List[BoundCheck]:
    """ρ(1) and ρ(4) agree with their exact fractions up to one rounding."""
    checks = []
    for r, expected in ((1, Fraction(1, 4)), (4, Fraction(256, 3125))):
        value = rho(r)
        checks.append(
            BoundCheck(
                check="rho_value",
                params={"r": r},
                lower=_fmt(expected),
                value=_fmt(value),
                upper=_fmt(expected),
                passed=value.contains(expected) and value.err <= _ulp_bound(value),
            )
        )
    return checks


def _ulp_bound(value: HPReal) -> mpf:
    with mp.workprec(value.prec + 8):
        return mp.ldexp(abs(value.value), 1 - value.prec)


def log_rho_mp(x: mpf) -> mpf:
    return x * mp.log(x) - (x + 1) * mp.log(x + 1)


def check_rho_monotone(r0: HPReal, grid_points: int = 64) -> List[BoundCheck]:
    """ρ(r)^(2/r) increases on (0, 8] and stays below 1/e left of r0."""
    with mp.workprec(96):
        grid = [mpf(8 * i) / grid_points for i in range(1, grid_points + 1)]
        values = [mp.exp(2 * log_rho_mp(r) / r) for r in grid]
        increasing = all(a < b for a, b in zip(values, values[1:]))
        inv_e = mp.exp(-1)
        below = [v < inv_e for r, v in zip(grid, values) if r < r0.lower()]
    return [
        BoundCheck(
            check="rho_power_increasing",
            params={"grid": f"8i/{grid_points}"},
            value=_fmt(values[-1]),
            passed=increasing,
        ),
        BoundCheck(
            check="rho_power_below_inv_e",
            params={"r0": _fmt(r0)},
            value=str(len(below)),
            upper=_fmt(inv_e),
            passed=all(below),
        ),
    ]


def beta_integral(m: int, r: Fraction, bits: int = 128) -> HPReal:
    """∫_0^1 x^(rm-1)(1-x)^m dx; exact when rm is an integer."""
    a = r * m
    if a.denominator == 1:
        a = a.numerator
        return HPReal.exact(Fraction(1, a * comb(a + m, m)), bits)
    with mp.workprec(bits + 16):
        value = mp.beta(mpf(a.numerator) / a.denominator, m + 1)
        return HPReal(value, mp.ldexp(value, 8 - bits), bits)


def _pointwise_max(a: int, m: int, points: int) -> Fraction:
    """max over x = i/points, 0 < i < points, of x^(a-1)(1-x)^m."""
    best = max(i ** (a - 1) * (points - i) ** m for i in range(1, points))
    return Fraction(best, points ** (a - 1 + m))


def check_beta_bounds(m: int, r: Real, plan: PrecisionPlan) -> List[BoundCheck]:
    """
    The beta integral against its lower bound ρ(r)^m/(rm), and the pointwise
    bound x^(rm-1)(1-x)^m < 4ρ(r)^m on a grid.

    Raises:
        RangeError: If m < 1 or r < 1.
    """
    r = _as_fraction(r)
    if m < 1 or r < 1:
        raise RangeError(f"need m >= 1 and r >= 1, got m={m}, r={r}", {"m": m, "r": str(r)})
    bits = plan.work_bits
    params = {"m": m, "r": str(r)}
    integral = beta_integral(m, r, bits)
    power = rho_power(r, m, bits)
    lower = power / HPReal.exact(r * m, bits)
    checks = [
        BoundCheck(
            check="beta_lower",
            params=params,
            lower=_fmt(lower),
            value=_fmt(integral),
            passed=integral.lower() > lower.upper(),
        )
    ]
    a = r * m
    if a.denominator == 1:
        a = a.numerator
        peak = _pointwise_max(a, m, POINTWISE_GRID)
        upper = 4 * Fraction(a**a * m**m, (a + m) ** (a + m))
        checks.append(
            BoundCheck(
                check="beta_pointwise",
                params={**params, "grid": POINTWISE_GRID},
                value=_fmt(peak),
                upper=_fmt(upper),
                passed=peak < upper,
            )
        )
    if r == 1:
        by_factorials = Fraction(factorial(m - 1) * factorial(m), factorial(2 * m))
        checks.append(
            BoundCheck(
                check="beta_factorial_identity",
                params=params,
                lower=_fmt(by_factorials),
                value=_fmt(integral),
                upper=_fmt(by_factorials),
                passed=Fraction(1, m * comb(2 * m, m)) == by_factorials,
            )
        )
    return checks


def _oracle_plan(plan: PrecisionPlan, size_log2: float, m: int) -> PrecisionPlan:
    """Absolute precision that still leaves plan.work_bits relative bits on a value near 2^size_log2."""
    return plan.with_extra_bits(max(0, math.ceil(-size_log2)) + 2 * m.bit_length())


def _sandwich(check: str, params: dict, lower: HPReal, value: HPReal, upper: HPReal) -> BoundCheck:
    return BoundCheck(
        check=check,
        params=params,
        lower=_fmt(lower),
        value=_fmt(value),
        upper=_fmt(upper),
        passed=value.lower() > lower.upper() and value.upper() < upper.lower(),
    )


def check_sandwich(
    base: Union[FormRoute, str],
    n: int,
    r_or_m: Optional[Real] = None,
    plan: Optional[PrecisionPlan] = None,
    q: int = 3,
) -> BoundCheck:
    """
    Two-sided bounds on the residual I of each route:
    base2 takes r (m = floor(2^(n+1)/r)), base3 uses m = 3^n - 3 and baseq
    uses m = (q^n - 1)/(q - 1).

    Raises:
        RangeError: If the parameters fall outside the bound's hypothesis.
    """
    base = FormRoute(base)
    plan = plan or PrecisionPlan.for_digits(20)
    bits = plan.work_bits

    if base is FormRoute.BASE2:
        r = _as_fraction(r_or_m if r_or_m is not None else 1)
        if not 1 <= r <= 1 << (n + 1):
            raise RangeError(f"need 1 <= r <= 2^(n+1), got r={r}", {"n": n, "r": str(r)})
        m = math.floor((1 << (n + 1)) / r)
        upper = rho_power(r, m, bits) * 6
        lower = rho_power(r, m + 1, bits) / HPReal.exact(2 * r * (m + 1), bits)
        I = i_base2_oracle(n, m, _oracle_plan(plan, float(m + 1) * log_rho(r) / math.log(2) - 8, m))
        return _sandwich("sandwich_base2", {"n": n, "r": str(r), "m": m}, lower, I, upper)

    if base is FormRoute.BASE3:
        if n < 1:
            raise RangeError(f"base-3 bound needs n >= 1, got {n}", {"n": n})
        m = 3**n - 3
        if r_or_m is not None and int(r_or_m) != m:
            raise RangeError(f"base-3 bound needs m = 3^n - 3 = {m}", {"n": n, "m": r_or_m})
        power = Fraction(27, 256) ** m
        lower = HPReal.exact(power / (40 * m + 90), bits)
        upper = HPReal.exact(3 * power, bits)
        I = i_base3_oracle(n, m, _oracle_plan(plan, m * math.log2(27 / 256) - 16, m))
        return _sandwich("sandwich_base3", {"n": n, "m": m}, lower, I, upper)

    if q < 2:
        raise RangeError(f"q must be >= 2, got {q}", {"q": q})
    m = (q**n - 1) // (q - 1)
    with mp.workprec(bits + 16):
        bound = q * mp.exp(-m * (1 + mp.log(2)))
        upper = HPReal(bound, mp.ldexp(bound, 8 - bits), bits)
    I = i_baseq_oracle(q, n, m, _oracle_plan(plan, -m * math.log2((q + 1) * math.e) - 16, m))
    return _sandwich("sandwich_baseq", {"q": q, "n": n, "m": m}, HPReal.zero(bits), I, upper)


def check_maximizer(q: int, plan: PrecisionPlan) -> List[BoundCheck]:
    """1/((q+1)e) < f_q(x_q) < 1/(2e), and one sign change in the maximizer polynomial."""
    x, f = x_q_maximizer(q, plan)
    with mp.workprec(plan.work_bits + 16):
        lower = 1 / ((q + 1) * mp.e)
        upper = 1 / (2 * mp.e)
    return [
        BoundCheck(
            check="maximizer_profile_bounds",
            params={"q": q, "x_q": _fmt(x)},
            lower=_fmt(lower),
            value=_fmt(f),
            upper=_fmt(upper),
            passed=f.lower() > lower and f.upper() < upper,
        ),
        BoundCheck(
            check="maximizer_sign_changes",
            params={"q": q},
            value=str(maximizer_polynomial(q).sign_changes()),
            passed=maximizer_polynomial(q).sign_changes() == 1,
        ),
    ]


def check_maximizer_trend(plan: PrecisionPlan, q_low: int = 3, q_high: int = 20) -> BoundCheck:
    """f_q(x_q) moves toward 1/(2e) as q grows."""
    _, f_low = x_q_maximizer(q_low, plan)
    _, f_high = x_q_maximizer(q_high, plan)
    with mp.workprec(plan.work_bits + 16):
        limit = 1 / (2 * mp.e)
        gap_low, gap_high = abs(f_low.value - limit), abs(f_high.value - limit)
    return BoundCheck(
        check="maximizer_trend",
        params={"q_low": q_low, "q_high": q_high},
        lower=_fmt(gap_high),
        value=_fmt(gap_low),
        passed=gap_high < gap_low,
    )


ERROR_BASES = (
    (GammaMethod.BASE2_M4, 1, lambda n: 2 ** (n + 1)),
    (GammaMethod.BASE2_M2, 2, lambda n: 2**n),
    (GammaMethod.BASE2_M1, 4, lambda n: 2 ** (n - 1)),
)


def asymptotic_constants_check(n: int = 4) -> List[BoundCheck]:
    """The base-2 error terms decay like (ρ(r)/2)^m for r = 1, 2, 4."""
    checks = []
    for method, r, m_of in ERROR_BASES:
        base = rho(r).value / 2
        per_m = predicted_error_log10(method, n) / m_of(n)
        expected = float(mp.log10(base))
        checks.append(
            BoundCheck(
                check="error_base",
                params={"method": method.value, "r": r, "n": n},
                lower=f"{expected:.12g}",
                value=f"{per_m:.12g}",
                upper=f"{expected:.12g}",
                passed=abs(per_m - expected) < 1e-12,
            )
        )
    return checks


def _rate_point(family: RateFamily, n: int, plan: PrecisionPlan, r: Fraction, q: int) -> Tuple[float, Optional[float]]:
    """(log I / scale, log I / q^n) for one grid point; the second only in base q."""
    if family is RateFamily.BASE2:
        m = math.floor((1 << (n + 1)) / r)
        I = i_base2_oracle(n, m, _oracle_plan(plan, m * log_rho(r) / math.log(2) - 16, m))
        scale = m
    elif family is RateFamily.BASE2_GENERAL:
        m = q**n
        I = i_damped_oracle(q, n, m, _oracle_plan(plan, m * log_rho(q) / math.log(2) - 16, m))
        scale = m
    elif family is RateFamily.BASE3:
        m = 3**n - 3
        I = i_base3_oracle(n, m, _oracle_plan(plan, 3**n * log_rho(3) / math.log(2) - 16, m))
        scale = 3**n
    else:
        m = (q**n - 1) // (q - 1)
        I = i_baseq_oracle(q, n, m, _oracle_plan(plan, -m * math.log2((q + 1) * math.e) - 16, m))
        scale = m
    if not I.is_positive():
        raise RangeError("residual not certified positive", {"family": family.value, "n": n})
    with mp.workprec(I.prec + 16):
        log_I = mp.log(I.value)
        per_scale = float(log_I / scale)
        per_power = float(log_I / q**n) if family is RateFamily.BASEQ else None
    return per_scale, per_power


def empirical_rate(
    family: Union[RateFamily, str],
    n_grid: List[int],
    plan: Optional[PrecisionPlan] = None,
    r: Real = 1,
    q: int = 3,
) -> RateReport:
    """
    log I / scale along n_grid with its limit:
    base2 → r log r - (r+1) log(r+1) (scale m = floor(2^(n+1)/r)),
    base2_general → q log q - (q+1) log(q+1) ((1-x)^(q^n) damping, scale q^n),
    base3 → 3 log 3 - 4 log 4 (scale 3^n),
    baseq → log f_q(x_q) (scale (q^n-1)/(q-1)). In base q >= 3 the report also
    carries log I'/q^n per grid point and its limit log f_q(x_q)/(q-1), which
    must lie above -1; small n sit below the limit, so only the limit is checked.
    """
    family = RateFamily(family)
    plan = plan or PrecisionPlan.for_digits(20)
    r = _as_fraction(r)
    params = {"r": str(r)} if family is RateFamily.BASE2 else {"q": q}
    if family is RateFamily.BASE2:
        theoretical = log_rho(r)
    elif family is RateFamily.BASE2_GENERAL:
        theoretical = log_rho(q)
    elif family is RateFamily.BASE3:
        theoretical = 3 * math.log(3) - 4 * math.log(4)
        params = {}
    else:
        _, f = x_q_maximizer(q, plan)
        theoretical = float(mp.log(f.value))

    empirical, powers = [], []
    for n in n_grid:
        per_scale, per_power = _rate_point(family, n, plan, r, q)
        empirical.append(per_scale)
        powers.append(per_power)
    converging = abs(empirical[-1] - theoretical) < abs(empirical[0] - theoretical)
    power_limit = theoretical / (q - 1) if family is RateFamily.BASEQ and q >= 3 else None
    logger.info(
        "Decay rate measured",
        extra={"data": {"family": family.value, "n_grid": n_grid, "converging": converging}},
    )
    return RateReport(
        family=family,
        params=params,
        n_grid=list(n_grid),
        empirical=empirical,
        theoretical=theoretical,
        converging=converging,
        per_power=[p for p in powers if p is not None],
        power_limit=power_limit,
        above_minus_one=None if power_limit is None else power_limit > -1,
    )


def rate_checks(report: RateReport) -> List[BoundCheck]:
    """Flatten a RateReport into check rows."""
    params = {"family": report.family.value, "n_grid": report.n_grid, **report.params}
    checks = [
        BoundCheck(
            check="rate_converging",
            params={**params, "theoretical": f"{report.theoretical:.10g}"},
            value=f"{report.empirical[-1]:.10g}",
            passed=report.converging,
        )
    ]
    if report.above_minus_one is not None:
        checks.append(
            BoundCheck(
                check="rate_above_minus_one",
                params=params,
                lower="-1",
                value=f"{report.power_limit:.10g}",
                passed=report.above_minus_one,
            )
        )
    return checks
