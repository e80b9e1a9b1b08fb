"""
Verify suites: identities, bounds, chi and rates.

Each suite is a sequence of steps returning BoundCheck entries; a domain
error aborts the suite and is reported in the result instead of raised.
"""

from fractions import Fraction
from math import gcd
from typing import Callable, Dict, List, Optional

from mpmath import mp, mpf

from qgamma.core.linforms import (
    base2_spec,
    base3_spec,
    baseq_spec,
    decompose,
    residual_oracle,
)
from qgamma.core.numerics import HPReal
from qgamma.core.numtheory import lcm_upto
from qgamma.core.qlog import qlog_accel, qlog_series
from qgamma.core.qpoly import (
    ONE_MINUS_X,
    IntPolynomial,
    a_coeffs,
    chi,
    f_poly,
    g_poly,
    qk_polynomial,
    reciprocal_identity_residual,
)
from qgamma.schemas.schema_bounds import BoundCheck, RateFamily, RateReport, SuiteResult
from qgamma.schemas.schema_numerics import PrecisionPlan
from qgamma.schemas.schema_qlog import QLogRequest
from qgamma.tasks.base import logged_task
from qgamma.util.exceptions import QGammaError
from qgamma.util.logger import setup_logger
from qgamma.verification.boundscheck import (
    asymptotic_constants_check,
    check_beta_bounds,
    check_maximizer,
    check_maximizer_trend,
    check_rho_monotone,
    check_rho_values,
    check_sandwich,
    empirical_rate,
    r0_residual,
    rate_checks,
    solve_r0,
    x_q_maximizer,
)

SUITES = ("identities", "bounds", "chi", "rates")

IDENTITY_BITS = 200
IDENTITY_TOLERANCE = mpf(10) ** -30
CHI_MAX_Q = 8
CHI_MAX_K = 60
CLOSED_FORM_MAX_K = 30


def _near(check: str, params: dict, value: HPReal | mpf, expected: str) -> BoundCheck:
    """value agrees with the decimal `expected` to its last printed digit."""
    decimals = len(expected.split(".")[1]) if "." in expected else 0
    with mp.workprec(128):
        x = value.value if isinstance(value, HPReal) else mpf(value)
        passed = abs(x - mpf(expected)) < mpf(10) ** -decimals
        shown = mp.nstr(x, decimals + 3)
    return BoundCheck(check=check, params=params, lower=expected, value=shown, upper=expected, passed=bool(passed))


def _equal(check: str, params: dict, value, expected) -> BoundCheck:
    return BoundCheck(
        check=check, params=params, lower=str(expected), value=str(value), upper=str(expected), passed=value == expected
    )


class SuiteVerifier:
    """Runs the verify suites at a fixed working precision."""

    def __init__(self, plan: Optional[PrecisionPlan] = None):
        self.plan = plan or PrecisionPlan.for_bits(128)
        self.logger = setup_logger(__name__)

    def verify_polynomial_identities(self) -> List[BoundCheck]:
        """Base-3 recursion against (1-x)^(6k)/(1+x+x^2), and (1-x)G_q + F_q = q."""
        checks = []
        for k in range(1, 6):
            residual = ONE_MINUS_X ** (6 * k) - qk_polynomial(k) * f_poly(3) - (-27) ** k
            checks.append(_equal("base3_recursion_identity", {"k": k}, residual.is_zero(), True))
        for k in range(1, 7):
            checks.append(_equal("a0k", {"k": k}, a_coeffs(k)[0], 2 * (1 - (-27) ** k)))
        for q in range(2, 11):
            total = ONE_MINUS_X * g_poly(q) + f_poly(q)
            checks.append(_equal("g_f_identity", {"q": q}, total.coeffs, IntPolynomial.constant(q).coeffs))
        return checks

    def verify_lcm(self) -> List[BoundCheck]:
        return [
            _equal("lcm", {"N": N}, lcm_upto(N).value, expected)
            for N, expected in ((4, 12), (8, 840), (16, 720720))
        ]

    def verify_qlog_routes(self) -> List[BoundCheck]:
        """Defining series against the accelerated route for ln_q(1+z)."""
        checks = []
        for q, z in ((2, Fraction(1)), (3, Fraction(1, 2)), (2, Fraction(-1, 3))):
            req = QLogRequest(q=q, z=z, plan=self.plan)
            series, accel = qlog_series(req), qlog_accel(req)
            checks.append(
                BoundCheck(
                    check="qlog_routes_agree",
                    params={"q": q, "z": str(z)},
                    value=mp.nstr(series.value, 30),
                    upper=mp.nstr(accel.value, 30),
                    passed=series.contains(accel),
                )
            )
        return checks

    def verify_decompositions(self) -> List[BoundCheck]:
        """Oracle residual against c·γ + L - A on the default grid."""
        plan = PrecisionPlan.for_bits(IDENTITY_BITS)
        specs = [base2_spec(n, m) for n in range(2, 5) for m in sorted({1, 1 << (n - 1), 1 << n, 1 << (n + 1)})]
        specs += [base3_spec(n, k) for n in (2, 3) for k in (1, 2)]
        specs += [baseq_spec(q, n, m) for q in (2, 3, 4) for n in (2, 3) for m in (1, 2)]
        checks = []
        for spec in specs:
            dec = decompose(spec, plan)
            oracle = residual_oracle(dec, plan)
            with mp.workprec(IDENTITY_BITS + 64):
                gap = abs(oracle.value - dec.I.value) + oracle.err + dec.I.err
            checks.append(
                BoundCheck(
                    check="decomposition_identity",
                    params={"route": spec.route.value, "q": spec.q, "n": spec.n, "m": spec.m},
                    value=mp.nstr(gap, 5),
                    upper="1e-30",
                    passed=bool(gap < IDENTITY_TOLERANCE),
                )
            )
        return checks

    def verify_chi_integrality(self) -> List[BoundCheck]:
        """χ_q(k) certifies as an integer (chi raises otherwise)."""
        checks = []
        for q in range(2, CHI_MAX_Q + 1):
            values = [chi(q, k).value for k in range(CHI_MAX_K + 1)]
            checks.append(
                BoundCheck(
                    check="chi_integral",
                    params={"q": q, "k_max": CHI_MAX_K},
                    value=str(values[-1]),
                    passed=all(isinstance(v, int) for v in values),
                )
            )
        return checks

    def verify_chi_closed_forms(self) -> List[BoundCheck]:
        checks = []
        for k in range(21):
            checks.append(_equal("chi2", {"k": k}, chi(2, k).value, (-1) ** k))
        with mp.workprec(256):
            for k in range(CLOSED_FORM_MAX_K + 1):
                # the weight (-1)^k χ_3(k) has the cosine closed form
                closed3 = 3 ** (mpf(k + 1) / 2) * 2 * mp.cos(mp.pi * (k - 1) / 6)
                checks.append(_equal("chi3_closed_form", {"k": k}, (-1) ** k * chi(3, k).value, int(mp.nint(closed3))))
                closed4 = 2 ** (mpf(3 * (k + 1)) / 2 + 1) * mp.cos(mp.pi * (3 * k + 1) / 4) + (-1) ** k * 2 ** (k + 1)
                checks.append(_equal("chi4_closed_form", {"k": k}, chi(4, k).value, int(mp.nint(closed4))))
        return checks

    def verify_chi_root_independence(self, k_max: int = 10) -> List[BoundCheck]:
        checks = []
        for q in range(2, CHI_MAX_Q + 1):
            units = [t for t in range(1, q) if gcd(t, q) == 1]
            same = all(chi(q, k, t).value == chi(q, k).value for k in range(k_max + 1) for t in units)
            checks.append(
                BoundCheck(check="chi_root_independence", params={"q": q, "k_max": k_max}, value=str(len(units)), passed=same)
            )
            residual = reciprocal_identity_residual(q)
            checks.append(
                BoundCheck(
                    check="reciprocal_identity",
                    params={"q": q},
                    value=mp.nstr(residual, 5),
                    upper="1e-30",
                    passed=bool(residual < mpf(10) ** -30),
                )
            )
        return checks

    def verify_constants(self) -> List[BoundCheck]:
        """r0, x_2, x_3 and f_3(x_3) against their published decimals."""
        r0 = solve_r0(self.plan)
        residual = r0_residual(r0)
        x2, f2 = x_q_maximizer(2, self.plan)
        x3, f3 = x_q_maximizer(3, self.plan)
        with mp.workprec(self.plan.work_bits):
            half_log_f3 = mp.log(f3.value) / 2
        checks = [
            _near("r0", {}, r0, "5.6213305349"),
            BoundCheck(check="r0_residual", params={}, value=mp.nstr(residual, 5), upper="1e-20", passed=bool(residual < mpf(10) ** -20)),
            _near("x_q", {"q": 2}, x2, "0.666666666666666667"),
            _near("f_q_at_x_q", {"q": 2}, f2, "0.148148148148148148"),
            _near("x_q", {"q": 3}, x3, "0.86304075"),
            _near("half_log_f_q", {"q": 3}, half_log_f3, "-0.90997390"),
        ]
        return checks + check_rho_values() + check_rho_monotone(r0)

    def verify_bound_grid(self) -> List[BoundCheck]:
        checks = []
        for m in range(1, 21):
            for r in (1, 2, 4):
                checks += check_beta_bounds(m, r, self.plan)
        checks.append(check_sandwich("base2", 4, 2, self.plan))
        checks.append(check_sandwich("base3", 2, None, self.plan))
        checks.append(check_sandwich("baseq", 2, None, self.plan, q=3))
        for q in range(2, 21):
            checks += check_maximizer(q, self.plan)
        checks.append(check_maximizer_trend(self.plan))
        checks += asymptotic_constants_check()
        return checks

    def verify_rate_grid(self) -> List[RateReport]:
        plan = PrecisionPlan.for_digits(20)
        return [
            empirical_rate(RateFamily.BASE2, [3, 4, 5, 6], plan, r=1),
            empirical_rate(RateFamily.BASE2_GENERAL, [1, 2, 3], plan, q=3),
            empirical_rate(RateFamily.BASE3, [2, 3, 4], plan),
            empirical_rate(RateFamily.BASEQ, [2, 3, 4], plan, q=3),
            empirical_rate(RateFamily.BASEQ, [2, 3], plan, q=4),
        ]

    def steps(self, suite: str) -> List[Callable[[], list]]:
        table: Dict[str, List[Callable[[], list]]] = {
            "identities": [
                self.verify_polynomial_identities,
                self.verify_lcm,
                self.verify_qlog_routes,
                self.verify_decompositions,
            ],
            "bounds": [self.verify_constants, self.verify_bound_grid],
            "chi": [self.verify_chi_integrality, self.verify_chi_closed_forms, self.verify_chi_root_independence],
            "rates": [self.verify_rate_grid],
        }
        if suite not in table:
            raise ValueError(f"unknown suite {suite!r}, expected one of {', '.join(SUITES)}")
        return table[suite]

    def run(self, suite: str) -> SuiteResult:
        """Run every step of `suite`; domain errors end the suite with success=False."""
        checks: List[BoundCheck] = []
        rates: List[RateReport] = []
        try:
            for step in self.steps(suite):
                for item in step():
                    if isinstance(item, RateReport):
                        rates.append(item)
                        checks.extend(rate_checks(item))
                    else:
                        checks.append(item)
                self.logger.debug(f"Step {step.__name__} done", extra={"data": {"suite": suite}})
        except QGammaError as e:
            self.logger.error(f"Suite {suite} aborted: {e.message}", extra={"data": e.details})
            return SuiteResult(
                suite=suite,
                success=False,
                checks=checks,
                rates=rates,
                error_type=e.__class__.__name__,
                error_message=e.message,
            )

        success = all(c.passed for c in checks)
        for failed in (c for c in checks if not c.passed):
            self.logger.warning(f"Check {failed.check} failed", extra={"data": failed.params})
        return SuiteResult(suite=suite, success=success, checks=checks, rates=rates)


@logged_task
def run_suite(suite: str, plan: Optional[PrecisionPlan] = None) -> SuiteResult:
    return SuiteVerifier(plan).run(suite)
