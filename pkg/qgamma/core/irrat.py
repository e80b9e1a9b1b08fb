"""
Fractional-part irrationality tests.

If {d·L} exceeds a threshold that dominates d·I, then d·I cannot equal the
fractional part, and no divisor of the excluded integer is a denominator of
γ. The base-2 tests use d = d_{2^n} and L = L_{n,m}; the base-3 test uses
d = d_{3^n} and m = 3^n - 3.
"""

import json
from fractions import Fraction
from pathlib import Path
from typing import Optional, Tuple, Union

from mpmath import mp, mpf

from qgamma.config import settings
from qgamma.core.linforms import (
    FormSpec,
    a_part_exact,
    a_part_fixed,
    base2_spec,
    base3_spec,
    i_base2_oracle,
    i_base3_oracle,
    l_part_fixed,
)
from qgamma.core.numerics import (
    HPReal,
    format_fixed,
    format_scientific,
    fractional_part,
    mpf_to_fraction,
    with_precision_retry,
)
from qgamma.core.numtheory import lcm_upto, smallest_non_divisor
from qgamma.core.series import reference_gamma
from qgamma.schemas.schema_certificates import (
    CriterionReport,
    IrrationalityCertificate,
    ThresholdKind,
)
from qgamma.schemas.schema_numerics import PrecisionPlan
from qgamma.tasks.base import logged_task
from qgamma.util.exceptions import RangeError
from qgamma.util.logger import set_base, setup_logger

logger = setup_logger(__name__)

Threshold = Union[Fraction, HPReal]


def check_window(n: int, m: int) -> None:
    """2^(n-1) <= m <= 2^(n+1)."""
    if n < 1 or not (1 << (n - 1)) <= m <= (1 << (n + 1)):
        raise RangeError(
            f"m must satisfy 2^(n-1) <= m <= 2^(n+1), got n={n}, m={m}", {"n": n, "m": m}
        )


def rho_power(n: int, m: int) -> Fraction:
    """ρ(r)^m with r = 2^(n+1)/m, i.e. R^R·m^m/(R+m)^(R+m), R = 2^(n+1)."""
    R = 1 << (n + 1)
    return Fraction(R**R * m**m, (R + m) ** (R + m))


def threshold_base2(
    n: int, m: int, kind: ThresholdKind, epsilon: Optional[Fraction] = None
) -> Threshold:
    """
    Raises:
        RangeError: If the kind does not apply to (n, m).
    """
    half = 1 << (n - 1)
    if kind in (ThresholdKind.POWER_OF_TWO, ThresholdKind.SIMPLIFIED_5POWER):
        if m != 1 << n:
            raise RangeError(f"{kind.value} needs m = 2^n, got n={n}, m={m}", {"n": n, "m": m})
        if kind is ThresholdKind.POWER_OF_TWO:
            return 6 * Fraction(128, 729) ** half
        if n < 2:
            raise RangeError("simplified_5power needs n > 1", {"n": n})
        return Fraction(1, 5**half)
    if kind is ThresholdKind.GENERAL:
        return 8**half * 6 * rho_power(n, m)
    if kind is ThresholdKind.GENERAL_EPS:
        if epsilon is None or epsilon <= 0:
            raise RangeError("eq26_eps needs epsilon > 0", {"epsilon": str(epsilon)})
        power = rho_power(n, m)
        with mp.workprec(96):
            log_value = (1 + mpf(epsilon.numerator) / epsilon.denominator) * (1 << n)
            log_value += mp.log(power.numerator) - mp.log(power.denominator)
            value = mp.exp(log_value)
            return HPReal(value, value * mpf(2) ** -60, 96)
    raise RangeError(f"{kind.value} is not a base-2 threshold")


def threshold_base3(n: int) -> Fraction:
    """3·(3/4)^(3^(n+1))."""
    return 3 * Fraction(3, 4) ** (3 ** (n + 1))


def _upper(threshold: Threshold) -> Fraction:
    if isinstance(threshold, HPReal):
        return mpf_to_fraction(threshold.upper())
    return threshold


def digit_budget_plan() -> PrecisionPlan:
    return PrecisionPlan.for_digits(settings.CERT_FRACTION_DIGITS + 2)


def certified_frac(spec: FormSpec, d: int, plan: PrecisionPlan) -> Tuple[HPReal, str, int]:
    """
    {d·L} with CERT_FRACTION_DIGITS certified digits. L is built with
    bitlength(d) + plan.work_bits fraction bits; ambiguity near an integer or
    a too-wide error bound doubles the budget.
    """

    def attempt(p: PrecisionPlan) -> Tuple[HPReal, str, int]:
        bits = d.bit_length() + p.work_bits
        dL = l_part_fixed(spec, bits).scale(d).to_hpreal()
        frac = fractional_part(dL)
        return frac, format_fixed(frac, settings.CERT_FRACTION_DIGITS), bits

    return with_precision_retry(attempt, plan)


def write_certificate(cert: IrrationalityCertificate, out_dir: Union[str, Path]) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"cert_base{cert.base}_n{cert.n}_m{cert.m}_{cert.kind.value}.json"
    path.write_text(cert.model_dump_json(indent=2) + "\n")
    return path


@logged_task
def test_base2(
    n: int,
    m: int,
    kind: ThresholdKind = ThresholdKind.GENERAL,
    epsilon: Optional[Fraction] = None,
    plan: Optional[PrecisionPlan] = None,
) -> IrrationalityCertificate:
    """
    Compare {d_{2^n}·L_{n,m}} with the threshold of `kind`.

    Raises:
        RangeError: Outside 2^(n-1) <= m <= 2^(n+1) or when the kind does not apply.
        PrecisionExhausted: If {d·L} cannot be certified.
    """
    set_base(2)
    check_window(n, m)
    kind = ThresholdKind(kind)
    threshold = threshold_base2(n, m, kind, epsilon)
    d = lcm_upto(1 << n).value
    frac, frac_text, bits = certified_frac(base2_spec(n, m), d, plan or digit_budget_plan())
    passed = mpf_to_fraction(frac.lower()) > _upper(threshold)
    excluded = (1 << (1 << n)) * d
    cert = IrrationalityCertificate(
        base=2,
        n=n,
        m=m,
        d_bitlen=d.bit_length(),
        frac=frac_text,
        threshold=format_scientific(threshold),
        kind=kind,
        passed=passed,
        excluded=f"2^{1 << n}*d_{1 << n}",
        denominator_lower_bound=smallest_non_divisor(excluded, (1 << n) + 1) if passed else None,
        work_bits=bits,
        d=d,
        epsilon=str(epsilon) if epsilon is not None else None,
    )
    logger.info(
        "Irrationality test finished",
        extra={"data": {"base": 2, "n": n, "m": m, "kind": kind.value, "passed": passed}},
    )
    return cert


@logged_task
def test_base3(n: int, plan: Optional[PrecisionPlan] = None) -> IrrationalityCertificate:
    """
    Compare {d_{3^n}·L_{n,3^n-3,3}} with 3·(3/4)^(3^(n+1)).

    Raises:
        RangeError: If n < 2.
    """
    set_base(3)
    if n < 2:
        raise RangeError(f"base-3 test needs n >= 2, got {n}", {"n": n})
    m = 3**n - 3
    threshold = threshold_base3(n)
    d = lcm_upto(3**n).value
    frac, frac_text, bits = certified_frac(base3_spec(n, m // 6), d, plan or digit_budget_plan())
    passed = mpf_to_fraction(frac.lower()) > threshold
    excluded = 3 ** (3**n) * d
    cert = IrrationalityCertificate(
        base=3,
        n=n,
        m=m,
        d_bitlen=d.bit_length(),
        frac=frac_text,
        threshold=format_scientific(threshold),
        kind=ThresholdKind.BASE3,
        passed=passed,
        excluded=f"3^{3**n}*d_{3**n}",
        denominator_lower_bound=smallest_non_divisor(excluded, 3**n + 1) if passed else None,
        work_bits=bits,
        d=d,
    )
    logger.info(
        "Irrationality test finished",
        extra={"data": {"base": 3, "n": n, "m": m, "passed": passed}},
    )
    return cert


test_base2.__test__ = False
test_base3.__test__ = False


def _circular_distance(a: HPReal, b: HPReal) -> mpf:
    with mp.workprec(max(a.prec, b.prec) + 8):
        diff = abs(a.value - b.value)
        return min(diff, 1 - diff)


@logged_task
def rationality_criterion_check(
    n: int, m: Optional[int] = None, plan: Optional[PrecisionPlan] = None, base: int = 2
) -> CriterionReport:
    """
    {d·L} against d·I, where the two agree for all large n exactly when γ is
    rational. Also reassembles {d·L} as {d·I - d·c·γ + d·A}.

    Raises:
        RangeError: Outside the window, or m != 3^n - 3 in base 3.
    """
    plan = plan or digit_budget_plan()
    if base == 2:
        if m is None:
            m = 1 << n
        check_window(n, m)
        spec = base2_spec(n, m)
        d = lcm_upto(1 << n).value
    elif base == 3:
        if n < 2 or (m is not None and m != 3**n - 3):
            raise RangeError("base-3 criterion needs n >= 2 and m = 3^n - 3", {"n": n, "m": m})
        m = 3**n - 3
        spec = base3_spec(n, m // 6)
        d = lcm_upto(3**n).value
    else:
        raise RangeError(f"base must be 2 or 3, got {base}", {"base": base})
    set_base(base)

    frac, frac_text, bits = certified_frac(spec, d, plan)
    oracle_plan = PrecisionPlan.for_bits(bits)
    I = i_base2_oracle(n, m, oracle_plan) if base == 2 else i_base3_oracle(n, m, oracle_plan)
    dI = I.mul_exact(d)

    if spec.q**n <= settings.EXACT_A_LIMIT:
        dA = HPReal.exact(d * a_part_exact(spec), bits + spec.magnitude_bits + d.bit_length())
    else:
        dA = a_part_fixed(spec, bits).scale(d).to_hpreal()
    gamma = reference_gamma(bits + spec.magnitude_bits)
    reassembled = fractional_part(dI - gamma.mul_exact(d * spec.gamma_coeff) + dA)
    distance = _circular_distance(frac, reassembled)

    return CriterionReport(
        base=base,
        n=n,
        m=m,
        frac=frac_text,
        d_times_I=mp.nstr(dI.value, settings.CERT_FRACTION_DIGITS),
        equal=bool(_circular_distance(frac, dI) <= frac.err + dI.err),
        d_times_I_in_unit_interval=dI.is_positive() and (1 - dI).is_positive(),
        reassembled_frac=format_fixed(reassembled, settings.CERT_FRACTION_DIGITS),
        reassembly_error=format_scientific(mpf_to_fraction(distance)) if distance else "0",
        work_bits=bits,
    )


def certificate_json(cert: IrrationalityCertificate) -> str:
    """Compact single-line JSON in the published key order."""
    return json.dumps(cert.model_dump(mode="json"), separators=(", ", ": "))
