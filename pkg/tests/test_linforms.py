from __future__ import annotations

from fractions import Fraction

import pytest
from mpmath import mp, mpf

from qgamma.config import settings
from qgamma.core import linforms
from qgamma.core.linforms import (
    a_part_exact,
    base2_spec,
    base3_spec,
    baseq_spec,
    decompose,
    decompose_base2,
    decompose_base3,
    decompose_baseq,
    decomposition_record,
    harmonic_block,
    harmonic_block_fixed,
    i_base2_oracle,
    i_base3_oracle,
    i_baseq_oracle,
    i_damped_oracle,
    integral_part,
    r_m,
    r_m_partial_fractions,
    residual_oracle,
    s_num,
    s_num_alternating,
    s_num_direct,
)
from qgamma.core.numerics import HPReal
from qgamma.core.numtheory import lcm_upto
from qgamma.core.series import GAMMA_INTRO, periodic_sign_sum
from qgamma.schemas.schema_linforms import FormRoute
from qgamma.schemas.schema_numerics import PrecisionPlan
from qgamma.util.exceptions import RangeError

IDENTITY_PLAN = PrecisionPlan.for_bits(200)
INTRO_SLACK = mpf(10) ** -50


def _assert_identity(dec) -> None:
    oracle = residual_oracle(dec, IDENTITY_PLAN)
    assert oracle.contains(dec.I), (dec.route, dec.n, dec.m)
    with mp.workprec(300):
        assert abs(oracle.value - dec.I.value) < mpf(10) ** -30


def test_beta_kernel_partial_fractions() -> None:
    for m in range(7):
        for t in range(1, 9):
            assert r_m(m, t) == r_m_partial_fractions(m, t)
    assert r_m(0, 5) == Fraction(1, 5)
    with pytest.raises(ValueError):
        r_m(1, 0)


@pytest.mark.parametrize("nu", range(1, 5))
@pytest.mark.parametrize("m", range(5))
def test_s_num_routes_agree(nu: int, m: int) -> None:
    plan = PrecisionPlan.for_bits(128)
    binomial_form = s_num(nu, m, plan).value
    direct = s_num_direct(nu, m, plan).value
    assert binomial_form.contains(direct)
    assert s_num_alternating(nu, m, 200).contains(binomial_form)


def test_s_num_without_damping_is_the_alternating_tail() -> None:
    plan = PrecisionPlan.for_bits(128)
    for nu in range(1, 5):
        kappa_series = periodic_sign_sum(2, 0, 1 << nu, 160).to_hpreal()
        assert s_num(nu, 0, plan).value.contains(kappa_series)


def test_base2_residual_at_origin_is_gamma() -> None:
    I = i_base2_oracle(0, 0, IDENTITY_PLAN)
    assert I.contains(GAMMA_INTRO, slack=INTRO_SLACK)


def test_base2_residual_summed_through_s_num() -> None:
    plan = PrecisionPlan.for_bits(160)
    total = HPReal.zero(160)
    for nu in range(3, 51):
        total = total + s_num(nu, 4, plan).value
    oracle = i_base2_oracle(2, 4, plan)
    assert oracle.contains(total, slack=mpf(2) ** -150)


@pytest.mark.parametrize("n", range(2, 6))
def test_base2_residuals_are_positive(n: int) -> None:
    for m in (1, 1 << (n - 1), 1 << n, 1 << (n + 1)):
        assert i_base2_oracle(n, m, IDENTITY_PLAN).is_positive()


@pytest.mark.parametrize("n", range(2, 6))
def test_base2_decomposition_identity(n: int) -> None:
    for m in (1, 1 << (n - 1), 1 << n, 1 << (n + 1)):
        dec = decompose_base2(n, m, IDENTITY_PLAN)
        assert dec.route is FormRoute.BASE2
        assert dec.gamma_coeff == 1 << m
        assert dec.a_is_exact and dec.a_integral
        assert dec.l_coeffs_integral
        _assert_identity(dec)


@pytest.mark.slow
def test_base2_decomposition_identity_n6() -> None:
    for m in (1, 32, 64, 128):
        _assert_identity(decompose_base2(6, m, IDENTITY_PLAN))


def test_base2_degenerate_form_is_gamma() -> None:
    dec = decompose_base2(0, 0, IDENTITY_PLAN)
    assert dec.L.value == 0
    assert dec.A == 0
    assert dec.I.contains(GAMMA_INTRO, slack=INTRO_SLACK)


@pytest.mark.parametrize("n", range(1, 9))
def test_base2_rational_part_is_cleared_by_lcm(n: int) -> None:
    d = lcm_upto(1 << n).value
    for m in sorted({1, 2, 1 << (n - 1), 1 << n, 1 << (n + 1)}):
        assert (d * a_part_exact(base2_spec(n, m))).denominator == 1


def test_base2_rejects_damping_beyond_window() -> None:
    with pytest.raises(RangeError):
        decompose_base2(1, 5, IDENTITY_PLAN)
    with pytest.raises(RangeError):
        base2_spec(-1, 0)


@pytest.mark.parametrize("n, k", [(2, 1), (2, 2), (3, 1), (3, 2)])
def test_base3_decomposition_identity(n: int, k: int) -> None:
    dec = decompose_base3(n, k, IDENTITY_PLAN)
    assert dec.gamma_coeff == (-27) ** k
    assert dec.m == 6 * k
    assert dec.coeff_table[0] == 2 * (1 - (-27) ** k)
    _assert_identity(dec)


@pytest.mark.parametrize("n", range(1, 5))
def test_base3_rational_part_is_cleared_by_lcm(n: int) -> None:
    d = lcm_upto(3**n).value
    for k in range(1, 5):
        if 6 * k >= 3 ** (n + 1):
            break
        assert (d * a_part_exact(base3_spec(n, k))).denominator == 1


def test_base3_integral_part_for_n_one() -> None:
    value = integral_part(3, 1, PrecisionPlan.for_bits(128))
    with mp.workprec(160):
        expected = mpf(3) / 2 - mp.log(3)
    assert value.contains(expected)
    assert harmonic_block(3, 1) == Fraction(3, 2)


def test_base3_residual_at_origin_is_gamma() -> None:
    assert i_base3_oracle(0, 0, IDENTITY_PLAN).contains(GAMMA_INTRO, slack=INTRO_SLACK)


def test_base3_oracle_block_size_invariance() -> None:
    plan = PrecisionPlan.for_bits(128)
    for n, m in ((1, 6), (2, 6), (2, 12)):
        assert i_base3_oracle(n, m, plan).contains(i_base3_oracle(n, m, plan, block=6))


def test_base3_rejects_damping_beyond_window() -> None:
    with pytest.raises(RangeError):
        base3_spec(1, 2)
    with pytest.raises(RangeError):
        decompose_base3(2, 0, IDENTITY_PLAN)


def test_baseq_in_base_two_reduces_to_base_two() -> None:
    for n in (2, 3):
        m = (1 << n) - 1
        general = decompose_baseq(2, n, m, IDENTITY_PLAN)
        binary = decompose_base2(n, m, IDENTITY_PLAN)
        assert general.gamma_coeff == binary.gamma_coeff
        assert general.L.contains(binary.L)
        assert general.I.contains(binary.I)
        assert general.coeff_table == binary.coeff_table


@pytest.mark.parametrize("q", [2, 3, 4, 5])
def test_baseq_degenerate_form_is_gamma(q: int) -> None:
    dec = decompose(baseq_spec(q, 0, 0), IDENTITY_PLAN)
    assert dec.gamma_coeff == 1
    assert dec.I.contains(GAMMA_INTRO, slack=INTRO_SLACK)
    assert i_baseq_oracle(q, 0, 0, IDENTITY_PLAN).contains(GAMMA_INTRO, slack=INTRO_SLACK)


@pytest.mark.parametrize("q, n, m", [(3, 2, 4), (3, 2, 1), (3, 3, 2), (4, 2, 2), (5, 2, 3)])
def test_baseq_decomposition_identity(q: int, n: int, m: int) -> None:
    dec = decompose_baseq(q, n, m, IDENTITY_PLAN)
    assert dec.gamma_coeff == q**m
    assert dec.l_coeffs_integral
    _assert_identity(dec)


def test_baseq_rejects_damping_beyond_window() -> None:
    with pytest.raises(RangeError):
        baseq_spec(3, 1, 5)


def test_plain_damping_oracle_in_base_two_is_the_base_two_oracle() -> None:
    plan = PrecisionPlan.for_bits(128)
    assert i_damped_oracle(2, 3, 5, plan).contains(i_base2_oracle(3, 5, plan))
    with pytest.raises(RangeError):
        i_damped_oracle(3, -1, 2, plan)


def test_harmonic_block_fixed_matches_exact() -> None:
    for q, n in ((2, 4), (3, 3), (5, 2)):
        fixed = harmonic_block_fixed(q, n, 128).to_hpreal()
        assert fixed.contains(harmonic_block(q, n))


def test_large_forms_switch_to_floating_rational_part(monkeypatch: pytest.MonkeyPatch) -> None:
    exact = decompose_base2(3, 4, IDENTITY_PLAN)
    monkeypatch.setattr(settings, "EXACT_A_LIMIT", 4)
    floating = decompose_base2(3, 4, IDENTITY_PLAN)
    assert not floating.a_is_exact
    assert floating.a_integral is None
    assert floating.A.contains(exact.A)
    assert floating.I.contains(exact.I)


def test_decomposition_without_residual() -> None:
    dec = decompose_base2(2, 4, IDENTITY_PLAN, with_residual=False)
    assert dec.I is None
    assert decomposition_record(dec).I is None


def test_decomposition_record_renders_decimal_strings() -> None:
    dec = decompose_base3(2, 1, IDENTITY_PLAN)
    record = decomposition_record(dec, significant=30)
    assert record.gamma_coeff == "-27"
    assert record.a_exact is True
    assert record.coeff_table[0] == "56"
    assert set(record.L) == {"value", "err"}
    payload = record.model_dump(mode="json")
    assert payload["route"] == "base3"
    assert payload["k"] == 1


def test_l_part_uses_worker_pool_in_ascending_order(monkeypatch: pytest.MonkeyPatch) -> None:
    spec = base2_spec(3, 16)
    serial = linforms.l_part_fixed(spec, 128)
    monkeypatch.setattr(settings, "THREADS", 2)
    monkeypatch.setattr(settings, "PARALLEL_MIN_TASKS", 4)
    assert linforms.l_part_fixed(spec, 128) == serial
