"""
γ to a requested number of digits.

The asymptotic formulas read γ off a linear form as (A - L)/c; the residual
I/c is the error, and each method's plan picks the smallest n whose error
term clears the digit target. The series routes are exposed through the same
entry point for the CLI and the bench.
"""

import math
from typing import Optional

from mpmath import mp, mpf

from qgamma.core.linforms import FormSpec, base2_spec, base3_spec, baseq_spec, decompose
from qgamma.core.numerics import HPReal, format_fixed
from qgamma.core.series import (
    baseq_accel_gamma,
    gosper_gamma,
    reference_gamma,
    vacca_partial,
)
from qgamma.schemas.schema_gamma import (
    GammaEstimate,
    GammaMethod,
    GammaPlan,
    predicted_error_log10,
)
from qgamma.schemas.schema_numerics import PrecisionPlan, digits_to_bits, guard_bits_for
from qgamma.tasks.base import logged_task
from qgamma.util.exceptions import PlanError, RangeError
from qgamma.util.logger import set_method, setup_logger

logger = setup_logger(__name__)

# Digits beyond the target required from the error term
DIGIT_MARGIN = 2
MAX_PLAN_N = 64
VACCA_MAX_DIGITS = 3

SERIES_METHODS = ("vacca", "gosper", "baseq-accel")
ASYM_METHODS = {
    "asym-27": GammaMethod.BASE2_M4,
    "asym-28": GammaMethod.BASE2_M2,
    "asym-29": GammaMethod.BASE2_M1,
    "asym-30": GammaMethod.BASE2_LOG,
    "asym-base3": GammaMethod.BASE3,
    "asym-baseq": GammaMethod.BASEQ,
}


def _min_n(method: GammaMethod) -> int:
    if method is GammaMethod.BASE3:
        return 2
    if method in (GammaMethod.BASE2_M1, GammaMethod.BASEQ):
        return 1
    return 0


def damping_exponent(method: GammaMethod, n: int, q: int = 2) -> int:
    """m belonging to (method, n)."""
    if n < _min_n(method):
        raise PlanError(f"{method.value} needs n >= {_min_n(method)}, got {n}", {"n": n})
    if method is GammaMethod.BASE2_M4:
        return 2 ** (n + 1)
    if method is GammaMethod.BASE2_M2:
        return 2**n
    if method is GammaMethod.BASE2_M1:
        return 2 ** (n - 1)
    if method is GammaMethod.BASE2_LOG:
        return 1
    if method is GammaMethod.BASE3:
        return 3**n - 3
    if q < 2:
        raise PlanError(f"q must be >= 2, got {q}", {"q": q})
    return (q**n - 1) // (q - 1)


def make_plan(method: GammaMethod, n: int, digits: int, q: int = 2) -> GammaPlan:
    """Plan for a fixed n; work bits cover `digits` plus the margin."""
    q = q if method is GammaMethod.BASEQ else (3 if method is GammaMethod.BASE3 else 2)
    m = damping_exponent(method, n, q)
    return GammaPlan(
        method=method,
        q=q,
        n=n,
        m=m,
        digits=digits,
        predicted_error_log10=predicted_error_log10(method, n, q),
        work_bits=digits_to_bits(digits + DIGIT_MARGIN) + guard_bits_for(m + 2),
    )


def plan_for_digits(digits: int, method: GammaMethod, q: int = 2) -> GammaPlan:
    """Smallest n whose predicted error is below 10^-(digits+2)."""
    if digits < 1:
        raise PlanError(f"digits must be >= 1, got {digits}")
    target = -(digits + DIGIT_MARGIN)
    if method is GammaMethod.BASE2_LOG:
        n = max(_min_n(method), math.floor(-target / math.log10(2)) - 1)
        while predicted_error_log10(method, n, q) >= target:
            n += 1
        return make_plan(method, n, digits, q)
    for n in range(_min_n(method), MAX_PLAN_N):
        if predicted_error_log10(method, n, q) < target:
            return make_plan(method, n, digits, q)
    raise PlanError(f"no n below {MAX_PLAN_N} reaches {digits} digits", {"method": method.value})


def form_for_plan(plan: GammaPlan) -> FormSpec:
    try:
        if plan.method is GammaMethod.BASE3:
            return base3_spec(plan.n, plan.m // 6)
        if plan.method is GammaMethod.BASEQ:
            return baseq_spec(plan.q, plan.n, plan.m)
        return base2_spec(plan.n, plan.m)
    except RangeError as e:
        raise PlanError(e.message, e.details) from e


def gamma_asym(plan: GammaPlan) -> HPReal:
    """
    (A - L)/c for the plan's linear form. The error of the approximation is
    not included in the returned err; it is I/c, bounded by the method's
    error term.
    """
    set_method(plan.method.value)
    spec = form_for_plan(plan)
    precision = PrecisionPlan.for_bits(plan.work_bits, term_count_hint=len(spec.coeffs) + 2)
    dec = decompose(spec, precision, with_residual=False)
    A = dec.A if isinstance(dec.A, HPReal) else HPReal.exact(dec.A, dec.work_bits + spec.magnitude_bits + 8)
    return (A - dec.L) / HPReal.exact(dec.gamma_coeff, spec.magnitude_bits + 8)


def _measured_error_log10(value: HPReal, bits: int) -> Optional[float]:
    reference = reference_gamma(bits + 16)
    with mp.workprec(bits + 32):
        diff = abs(value.value - reference.value)
        if not diff:
            return None
        return float(mp.log10(diff))


def _vacca_terms(digits: int) -> int:
    if digits > VACCA_MAX_DIGITS:
        raise PlanError(f"Vacca's series is limited to {VACCA_MAX_DIGITS} digits here")
    N = 2
    while (N.bit_length() + 1) * 10 ** (digits + DIGIT_MARGIN) >= N:
        N *= 2
    return N


@logged_task
def compute_gamma(
    method: str,
    digits: int,
    q: Optional[int] = None,
    n: Optional[int] = None,
    work_bits: Optional[int] = None,
    measure: bool = False,
) -> GammaEstimate:
    """
    γ rounded to `digits` decimals by a named method. Asymptotic methods take
    an optional n override; the approximation error is folded into err before
    rounding, so printed digits are certified against the method's error term.
    """
    set_method(method)
    plan = PrecisionPlan.for_digits(digits, term_count_hint=1 << 20)
    if work_bits:
        plan = plan.model_copy(update={"work_bits": max(work_bits, plan.work_bits)})
    estimate_q, estimate_n, estimate_m, predicted, terms = q, n, None, None, None

    if method == "gosper":
        series = gosper_gamma(plan)
        value, terms = series.value, series.terms_used
    elif method == "baseq-accel":
        estimate_q = q or 2
        series = baseq_accel_gamma(estimate_q, plan)
        value, terms = series.value, series.terms_used
    elif method == "vacca":
        series = vacca_partial(n or _vacca_terms(digits))
        value, terms = series.value, series.terms_used
        estimate_n = series.terms_used
    elif method in ASYM_METHODS:
        gamma_method = ASYM_METHODS[method]
        if n is None:
            gplan = plan_for_digits(digits + 1, gamma_method, q or 3).model_copy(
                update={"digits": digits}
            )
        else:
            gplan = make_plan(gamma_method, n, digits, q or 3)
        if work_bits:
            gplan = gplan.model_copy(update={"work_bits": max(work_bits, gplan.work_bits)})
        value = gamma_asym(gplan).with_error(mpf(10) ** gplan.predicted_error_log10)
        estimate_q, estimate_n, estimate_m = gplan.q, gplan.n, gplan.m
        predicted = gplan.predicted_error_log10
        terms = len(form_for_plan(gplan).l_indices)
    else:
        raise PlanError(f"unknown method {method!r}")

    measured = _measured_error_log10(value, plan.work_bits) if measure else None
    logger.info(
        "γ evaluated",
        extra={"data": {"method": method, "digits": digits, "n": estimate_n, "terms": terms}},
    )
    return GammaEstimate(
        method=method,
        q=estimate_q,
        n=estimate_n,
        m=estimate_m,
        digits=digits,
        value=format_fixed(value, digits),
        predicted_error_log10=predicted,
        measured_error_log10=measured,
        terms=terms,
        work_bits=plan.work_bits,
    )
