from __future__ import annotations

from fractions import Fraction

import pytest
from mpmath import mp, mpf

from qgamma.config import settings
from qgamma.core.qlog import (
    qlog_accel,
    qlog_accel_fixed,
    qlog_series,
    tail_sum,
    tail_sum_table,
)
from qgamma.schemas.schema_numerics import PrecisionPlan
from qgamma.schemas.schema_qlog import QLogRequest
from qgamma.tasks.pool import ordered_map, worker_count
from qgamma.util.exceptions import DomainError


def _direct_qlog(q: Fraction, z: Fraction, terms: int, prec: int = 256) -> mpf:
    with mp.workprec(prec):
        qf = mpf(q.numerator) / q.denominator
        zf = mpf(z.numerator) / z.denominator
        return mp.fsum((-1) ** (nu - 1) * zf**nu / (qf**nu - 1) for nu in range(1, terms + 1))


def _direct_tail(q: int, n: int, k: int, terms: int, prec: int = 256) -> mpf:
    with mp.workprec(prec):
        return mp.fsum(mpf(1) / (mpf(q) ** nu + k) for nu in range(n + 1, n + terms + 1))


def test_qlog_of_zero_is_exact(plan_128: PrecisionPlan) -> None:
    req = QLogRequest(q=2, z=0, plan=plan_128)
    assert qlog_series(req).value == 0
    assert qlog_series(req).err == 0
    assert qlog_accel(req).value == 0


def test_qlog_series_against_direct_sum(plan_128: PrecisionPlan) -> None:
    req = QLogRequest(q=2, z=1, plan=plan_128)
    value = qlog_series(req)
    assert value.contains(_direct_qlog(Fraction(2), Fraction(1), 400), slack=mpf(2) ** -200)


def test_series_alternates_in_sign(plan_128: PrecisionPlan) -> None:
    # ln_2(2) = Σ 1/(2^ν + 1)
    req = QLogRequest(q=2, z=1, plan=plan_128)
    assert float(qlog_series(req)) == pytest.approx(0.7644997803, abs=1e-9)
    assert float(qlog_accel(req)) == pytest.approx(0.7644997803, abs=1e-9)
    negative = QLogRequest(q=2, z=Fraction(-1, 2), plan=plan_128)
    assert qlog_series(negative).value < 0
    assert qlog_series(negative).contains(qlog_accel(negative))


@pytest.mark.parametrize("bits", [256, 1024])
def test_routes_agree_on_a_grid(bits: int) -> None:
    plan = PrecisionPlan.for_bits(bits)
    for q in (2, 3, 5, 10):
        for j in range(-q, q * q + 1, max(1, q // 2)):
            req = QLogRequest(q=q, z=Fraction(j, q * q), plan=plan)
            assert qlog_series(req).contains(qlog_accel(req)), (q, j)


def test_routes_agree_near_the_edge_of_the_domain() -> None:
    plan = PrecisionPlan.for_bits(1000)
    req = QLogRequest(q=3, z=Fraction(2, 9), plan=plan)
    assert qlog_series(req).contains(qlog_accel(req))
    edge = QLogRequest(q=3, z=Fraction(29, 10), plan=PrecisionPlan.for_bits(128))
    assert qlog_series(edge).contains(qlog_accel(edge))


def test_qlog_rejects_arguments_outside_the_disc(plan_128: PrecisionPlan) -> None:
    req = QLogRequest(q=2, z=2, plan=plan_128)
    with pytest.raises(DomainError):
        qlog_series(req)
    with pytest.raises(DomainError):
        qlog_accel(QLogRequest(q=3, z=-3, plan=plan_128))


def test_request_requires_integer_base_unless_allowed(plan_128: PrecisionPlan) -> None:
    with pytest.raises(ValueError):
        QLogRequest(q=Fraction(3, 2), z=1, plan=plan_128)
    with pytest.raises(ValueError):
        QLogRequest(q=1, z=0, plan=plan_128)
    with pytest.raises(ValueError):
        QLogRequest(q=1, z=0, plan=plan_128, allow_rational_q=True)
    assert QLogRequest(q="3/2", z="1/2", plan=plan_128, allow_rational_q=True).q == Fraction(3, 2)


def test_scaled_qlog_approaches_natural_log_as_q_tends_to_one() -> None:
    plan = PrecisionPlan.for_bits(128)
    z = Fraction(1, 2)
    gaps = []
    with mp.workprec(160):
        target = mp.log(mpf(3) / 2)
    for t in (10, 20, 30):
        q = 1 + Fraction(1, 2**t)
        value = qlog_series(QLogRequest(q=q, z=z, plan=plan, allow_rational_q=True))
        with mp.workprec(160):
            scaled = value.value * (mpf(q.numerator) / q.denominator - 1)
            gaps.append(abs(scaled - target))
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[2] < mpf(2) ** -28


def test_tail_sum_with_zero_offset_is_closed_form() -> None:
    value = tail_sum(3, 2, 0, PrecisionPlan.for_bits(128))
    assert value.contains(Fraction(1, 18))


def test_tail_sum_base_two_against_direct_summation() -> None:
    plan = PrecisionPlan.for_bits(160)
    value = tail_sum(2, 0, 1, plan)
    assert value.contains(_direct_tail(2, 0, 1, 200), slack=mpf(10) ** -30)


@pytest.mark.parametrize("q", [2, 3])
@pytest.mark.parametrize("n", range(5))
def test_tail_sum_identity(q: int, n: int) -> None:
    plan = PrecisionPlan.for_bits(160)
    remainder = Fraction(1, q ** (n + 120) * (q - 1))
    top = q ** (n + 1)
    for k in sorted({1, 2, top // 2, top - 1}):
        if not 0 < k < top:
            continue
        value = tail_sum(q, n, k, plan)
        direct = _direct_tail(q, n, k, 120)
        assert value.contains(direct, slack=mpf(remainder.numerator) / remainder.denominator + mpf(2) ** -200)


def test_tail_sum_rejects_offsets_out_of_range(plan_128: PrecisionPlan) -> None:
    with pytest.raises(DomainError):
        tail_sum(2, 1, 4, plan_128)
    with pytest.raises(DomainError):
        tail_sum(2, 1, -1, plan_128)


def test_tail_sum_error_shrinks_with_precision() -> None:
    low = tail_sum(3, 2, 7, PrecisionPlan.for_bits(96))
    high = tail_sum(3, 2, 7, PrecisionPlan.for_bits(192))
    with mp.workprec(256):
        assert abs(low.value - high.value) <= low.err + high.err
    assert high.err < low.err


def test_direct_head_and_series_remainder_agree() -> None:
    z = Fraction(5, 4)
    full = qlog_accel_fixed(2, z, 128).to_hpreal()
    split = qlog_accel_fixed(2, z, 128, n_direct=3).to_hpreal()
    assert full.contains(split)


def test_tail_sum_table_keeps_input_order() -> None:
    ks = [5, 1, 3, 0]
    table = tail_sum_table(2, 2, ks, 96)
    for k, fixed in zip(ks, table):
        assert fixed.to_hpreal().contains(tail_sum(2, 2, k, PrecisionPlan.for_bits(96)))


def test_worker_pool_matches_serial_evaluation(monkeypatch: pytest.MonkeyPatch) -> None:
    ks = list(range(1, 9))
    serial = tail_sum_table(3, 1, ks, 96)
    monkeypatch.setattr(settings, "THREADS", 2)
    monkeypatch.setattr(settings, "PARALLEL_MIN_TASKS", 4)
    assert worker_count(len(ks)) == 2
    assert tail_sum_table(3, 1, ks, 96) == serial


def test_ordered_map_runs_small_batches_in_process() -> None:
    assert worker_count(3) == 1
    assert ordered_map(abs, [-1, 2, -3]) == [1, 2, 3]
