from __future__ import annotations

import json
from fractions import Fraction

import pytest

from qgamma.config import settings
from qgamma.core import irrat
from qgamma.core.numtheory import lcm_upto, smallest_non_divisor
from qgamma.schemas.schema_certificates import ThresholdKind
from qgamma.util.exceptions import RangeError

CERT_KEYS = [
    "base",
    "n",
    "m",
    "d_bitlen",
    "frac",
    "threshold",
    "kind",
    "passed",
    "excluded",
    "denominator_lower_bound",
    "work_bits",
]


def test_window_accepts_both_edges() -> None:
    irrat.check_window(5, 16)
    irrat.check_window(5, 64)
    with pytest.raises(RangeError):
        irrat.check_window(5, 15)
    with pytest.raises(RangeError):
        irrat.check_window(5, 65)
    with pytest.raises(RangeError):
        irrat.test_base2(5, 15)


def test_threshold_with_m_equal_two_to_the_n() -> None:
    assert irrat.threshold_base2(2, 4, ThresholdKind.POWER_OF_TWO) == 6 * Fraction(128, 729) ** 2
    assert irrat.threshold_base2(3, 8, ThresholdKind.SIMPLIFIED_5POWER) == Fraction(1, 625)
    with pytest.raises(RangeError):
        irrat.threshold_base2(3, 4, ThresholdKind.POWER_OF_TWO)
    with pytest.raises(RangeError):
        irrat.threshold_base2(1, 2, ThresholdKind.SIMPLIFIED_5POWER)


def test_general_threshold_reduces_to_the_m_equal_two_to_the_n_case() -> None:
    # r = 2: 8^(2^(n-1))·6·(4/27)^(2^n) = 6·(128/729)^(2^(n-1))
    for n in range(1, 6):
        m = 1 << n
        assert irrat.threshold_base2(n, m, ThresholdKind.GENERAL) == irrat.threshold_base2(
            n, m, ThresholdKind.POWER_OF_TWO
        )


def test_rho_power_at_r_one_is_a_power_of_a_quarter() -> None:
    assert irrat.rho_power(3, 16) == Fraction(1, 4) ** 16


def test_epsilon_threshold_needs_epsilon() -> None:
    with pytest.raises(RangeError):
        irrat.threshold_base2(4, 16, ThresholdKind.GENERAL_EPS)
    with pytest.raises(RangeError):
        irrat.threshold_base2(4, 16, ThresholdKind.GENERAL_EPS, Fraction(0))
    refined = irrat.threshold_base2(4, 16, ThresholdKind.GENERAL_EPS, Fraction(1, 10))
    assert refined.is_positive()


def test_base3_threshold() -> None:
    assert irrat.threshold_base3(2) == 3 * Fraction(3, 4) ** 27
    for n in range(2, 6):
        assert irrat.threshold_base3(n + 1) < 3 * irrat.threshold_base3(n) ** 2


def test_base2_certificate_is_self_consistent() -> None:
    cert = irrat.test_base2(2, 4, ThresholdKind.POWER_OF_TWO)
    assert cert.d == 12
    assert cert.excluded == "2^4*d_4"
    assert cert.kind is ThresholdKind.POWER_OF_TWO
    assert cert.frac.startswith("0.")
    assert len(cert.frac) == 2 + settings.CERT_FRACTION_DIGITS
    if cert.passed:
        assert Fraction(cert.frac) > irrat.threshold_base2(2, 4, ThresholdKind.POWER_OF_TWO) - Fraction(1, 10**9)
        assert cert.denominator_lower_bound == smallest_non_divisor(16 * 12, 5)
    else:
        assert cert.denominator_lower_bound is None


@pytest.mark.parametrize("n", [3, 4, 5])
def test_base2_certificates_are_reproducible(n: int) -> None:
    m = 1 << n
    first = irrat.certificate_json(irrat.test_base2(n, m))
    second = irrat.certificate_json(irrat.test_base2(n, m))
    assert first == second


def test_base3_certificate_fields() -> None:
    cert = irrat.test_base3(2)
    assert (cert.base, cert.n, cert.m) == (3, 2, 6)
    assert cert.kind is ThresholdKind.BASE3
    assert cert.d == lcm_upto(9).value
    assert cert.excluded == "3^9*d_9"
    assert cert.passed is (cert.denominator_lower_bound is not None)


def test_base3_certificate_for_n_three() -> None:
    cert = irrat.test_base3(3)
    assert cert.m == 24
    assert cert.d_bitlen == lcm_upto(27).value.bit_length()


def test_base3_rejects_small_n() -> None:
    with pytest.raises(RangeError):
        irrat.test_base3(1)


def test_certificate_json_keys_and_file(tmp_path) -> None:
    cert = irrat.test_base2(3, 8, ThresholdKind.POWER_OF_TWO)
    payload = json.loads(irrat.certificate_json(cert))
    assert list(payload) == CERT_KEYS
    assert payload["kind"] == "eq25"
    path = irrat.write_certificate(cert, tmp_path / "certs")
    assert path.name == "cert_base2_n3_m8_eq25.json"
    assert json.loads(path.read_text()) == payload


@pytest.mark.parametrize("n", [4, 5, 6])
def test_fraction_reassembles_from_the_residual(n: int) -> None:
    report = irrat.rationality_criterion_check(n, 1 << n)
    assert float(report.reassembly_error) < 1e-9
    assert report.d_times_I_in_unit_interval


def test_criterion_reports_both_quantities() -> None:
    report = irrat.rationality_criterion_check(5, 32)
    assert report.d_times_I_in_unit_interval
    assert not report.equal
    assert report.frac != report.d_times_I


def test_criterion_in_base_three() -> None:
    report = irrat.rationality_criterion_check(2, base=3)
    assert report.m == 6
    assert report.d_times_I_in_unit_interval
    with pytest.raises(RangeError):
        irrat.rationality_criterion_check(2, 5, base=3)


def test_excluded_denominators_near_4096() -> None:
    d = lcm_upto(4096).value
    # 4097 = 17·241 and 4098 = 2·3·683 both divide d_4096
    assert d % 4097 == 0 and d % 4098 == 0
    assert smallest_non_divisor((1 << 4096) * d, 4097) == 4099


@pytest.mark.slow
def test_base2_at_n12_excludes_denominators_below_4099() -> None:
    cert = irrat.test_base2(12, 4096, ThresholdKind.SIMPLIFIED_5POWER)
    assert cert.frac.startswith("0.178346164")
    assert cert.passed
    assert cert.denominator_lower_bound == 4099
