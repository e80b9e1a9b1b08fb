from __future__ import annotations

import math

import pytest
from mpmath import mp, mpf

from qgamma.core.gammaengine import (
    ASYM_METHODS,
    compute_gamma,
    damping_exponent,
    form_for_plan,
    gamma_asym,
    make_plan,
    plan_for_digits,
)
from qgamma.core.numerics import format_fixed
from qgamma.core.series import GAMMA_INTRO_DIGITS, reference_gamma
from qgamma.schemas.schema_gamma import GammaMethod, GammaPlan, predicted_error_log10
from qgamma.util.exceptions import PlanError


def _signed_error(plan: GammaPlan) -> mpf:
    """γ minus the asymptotic estimate, i.e. I/c."""
    estimate = gamma_asym(plan)
    reference = reference_gamma(plan.work_bits + 64)
    with mp.workprec(plan.work_bits + 64):
        return reference.value - estimate.value


@pytest.mark.parametrize(
    "method, n, m",
    [
        (GammaMethod.BASE2_M4, 3, 16),
        (GammaMethod.BASE2_M2, 3, 8),
        (GammaMethod.BASE2_M1, 3, 4),
        (GammaMethod.BASE2_LOG, 7, 1),
        (GammaMethod.BASE3, 3, 24),
    ],
)
def test_damping_exponent_per_method(method: GammaMethod, n: int, m: int) -> None:
    assert damping_exponent(method, n) == m


def test_damping_exponent_in_base_q() -> None:
    assert damping_exponent(GammaMethod.BASEQ, 3, 3) == 13
    assert damping_exponent(GammaMethod.BASEQ, 2, 5) == 6


def test_damping_exponent_rejects_small_n() -> None:
    with pytest.raises(PlanError):
        damping_exponent(GammaMethod.BASE3, 1)
    with pytest.raises(PlanError):
        damping_exponent(GammaMethod.BASE2_M1, 0)


@pytest.mark.parametrize("n", range(1, 13))
def test_base3_sign_follows_the_parity_of_n(n: int) -> None:
    m = 3**n - 3
    assert m % 6 == 0
    k = m // 6
    # sign of (-27)^k
    assert (-1) ** (3 * k) == (-1) ** (n - 1)


def test_predicted_error_terms() -> None:
    assert predicted_error_log10(GammaMethod.BASE2_M4, 1) == pytest.approx(-12 * math.log10(2))
    assert predicted_error_log10(GammaMethod.BASE2_M2, 2) == pytest.approx(4 * math.log10(2 / 27))
    assert predicted_error_log10(GammaMethod.BASE2_LOG, 10) == pytest.approx(-10 * math.log10(2))
    assert predicted_error_log10(GammaMethod.BASE3, 2) == pytest.approx(9 * math.log10(3**2.5 / 64))


def test_plan_for_digits_picks_smallest_n() -> None:
    plan = plan_for_digits(20, GammaMethod.BASE2_M2)
    assert (plan.n, plan.m) == (5, 32)
    assert plan.predicted_error_log10 < -22
    assert predicted_error_log10(GammaMethod.BASE2_M2, plan.n - 1) >= -22


def test_plan_for_digits_for_the_logarithmic_rate() -> None:
    plan = plan_for_digits(5, GammaMethod.BASE2_LOG)
    assert plan.m == 1
    assert plan.predicted_error_log10 < -7
    assert predicted_error_log10(GammaMethod.BASE2_LOG, plan.n - 1) >= -7


def test_plan_for_digits_rejects_zero_digits() -> None:
    with pytest.raises(PlanError):
        plan_for_digits(0, GammaMethod.BASE3)


def test_plan_validator_checks_the_prediction() -> None:
    plan = make_plan(GammaMethod.BASE2_M4, 2, 10)
    with pytest.raises(ValueError):
        GammaPlan(**{**plan.model_dump(), "predicted_error_log10": -1.0})


def test_form_for_plan_matches_the_method() -> None:
    form = form_for_plan(make_plan(GammaMethod.BASE3, 2, 10))
    assert (form.q, form.m, form.k, form.gamma_coeff) == (3, 6, 1, -27)
    form = form_for_plan(make_plan(GammaMethod.BASEQ, 2, 10, q=4))
    assert (form.q, form.m, form.gamma_coeff) == (4, 5, 4**5)


def test_base2_rate_with_m_equal_two_to_the_n() -> None:
    plan = make_plan(GammaMethod.BASE2_M2, 6, 70)
    delta = _signed_error(plan)
    assert delta > 0
    assert delta < 6 * mpf(10) ** plan.predicted_error_log10


def test_logarithmic_rate_error_is_positive_and_small() -> None:
    n = 12
    delta = _signed_error(make_plan(GammaMethod.BASE2_LOG, n, 10))
    assert 0 < delta < mpf(2) ** (-n + 1)


@pytest.mark.slow
def test_logarithmic_rate_error_at_n20() -> None:
    n = 20
    delta = _signed_error(make_plan(GammaMethod.BASE2_LOG, n, 10))
    assert 0 < delta < mpf(2) ** (-n + 1)


def test_base_q_error_is_positive_and_bounded() -> None:
    q, n = 3, 3
    plan = make_plan(GammaMethod.BASEQ, n, 40, q=q)
    delta = _signed_error(plan)
    with mp.workprec(128):
        bound = q / (2 * mp.e * q) ** plan.m
    assert 0 < delta < bound


def test_base3_error_is_positive_for_odd_n() -> None:
    # n = 3: (-27)^4 > 0, so γ - (A - L)/c = I/c > 0
    assert _signed_error(make_plan(GammaMethod.BASE3, 3, 30)) > 0


@pytest.mark.parametrize(
    "method, q",
    [
        ("gosper", None),
        ("baseq-accel", 3),
        ("asym-27", None),
        ("asym-28", None),
        ("asym-29", None),
        ("asym-base3", None),
        ("asym-baseq", 3),
    ],
)
def test_methods_agree_to_twenty_digits(method: str, q: int | None) -> None:
    expected = format_fixed(reference_gamma(256), 20)
    estimate = compute_gamma(method, 20, q=q)
    assert estimate.value == expected
    assert estimate.digits == 20


def test_gosper_prints_the_published_digits() -> None:
    estimate = compute_gamma("gosper", 50, measure=True)
    assert estimate.value == GAMMA_INTRO_DIGITS
    assert estimate.measured_error_log10 is None or estimate.measured_error_log10 < -50


def test_asymptotic_estimate_records_its_plan() -> None:
    estimate = compute_gamma("asym-28", 20)
    assert (estimate.n, estimate.m, estimate.q) == (5, 32, 2)
    assert estimate.predicted_error_log10 == pytest.approx(predicted_error_log10(GammaMethod.BASE2_M2, 5))
    assert estimate.terms == 31


def test_asymptotic_estimate_with_explicit_n() -> None:
    estimate = compute_gamma("asym-27", 10, n=4)
    assert (estimate.n, estimate.m) == (4, 32)
    assert estimate.value == format_fixed(reference_gamma(128), 10)


def test_vacca_is_limited_to_a_few_digits() -> None:
    assert compute_gamma("vacca", 2).value == "0.58"
    with pytest.raises(PlanError):
        compute_gamma("vacca", 4)


def test_unknown_method_is_rejected() -> None:
    with pytest.raises(PlanError):
        compute_gamma("zeta-trick", 10)


def test_asymptotic_method_names() -> None:
    assert set(ASYM_METHODS) == {"asym-27", "asym-28", "asym-29", "asym-30", "asym-base3", "asym-baseq"}
