import math

import pytest

from attractorlab import DomainError, LogTime, LogValue, TowerValue, tower_difference


def test_plain_tower_round_trip():
    for x in (0.0, 0.5, 1.0, 2.5, 10.0, 1e6):
        assert TowerValue.from_float(x).to_float() == pytest.approx(x, rel=1e-13)
    # three levels deep the mantissa's rounding is amplified by ~ln(x) * ln(ln(x)) * ...
    assert TowerValue.from_float(1e300).to_float() == pytest.approx(1e300, rel=1e-11)


def test_mantissa_window_above_level_zero():
    t = TowerValue.from_float(1e6)
    assert t.level >= 1
    assert 1.0 <= t.mantissa < math.e


def test_exp_of_huge_tower_increments_level():
    t = TowerValue(2, 3.0 if 3.0 < math.e else 2.5)
    assert t.exp().level == t.level + 1
    assert t.exp().mantissa == pytest.approx(t.mantissa)


def test_ln_inverts_exp():
    t = TowerValue.from_float(123.0)
    assert t.exp().ln().to_float() == pytest.approx(123.0, rel=1e-12)


def test_ordering_across_levels():
    small = TowerValue.from_float(1e300)
    big = TowerValue.from_log(800.0)
    assert small < big
    assert not big < small


def test_tower_difference_saturates():
    huge = TowerValue.from_log(1e5)
    assert tower_difference(huge, TowerValue.from_float(1.0)) == math.inf
    assert tower_difference(TowerValue.from_float(3.0), TowerValue.from_float(1.0)) == pytest.approx(2.0)


def test_add_real_absorbed_at_tower_scale():
    big = TowerValue(3, 2.0)
    assert big.add_real(math.log(2.0)) == big or big.add_real(math.log(2.0)).level == 3


def test_log_value_sum_is_logaddexp():
    s = LogValue.from_real(3.0) + LogValue.from_real(4.0)
    assert s.to_float() == pytest.approx(7.0)
    assert (LogValue.from_real(6.0) / LogValue.from_real(2.0)).to_float() == pytest.approx(3.0)


def test_log_value_rejects_negative():
    with pytest.raises(DomainError):
        LogValue.from_real(-1.0)


def test_log_time_same_anchor_ratio_is_offset_difference():
    anchor = TowerValue(3, 1.5)
    a, b = LogTime(anchor, 0.7), LogTime(anchor, 0.2)
    assert a.log_minus(b) == pytest.approx(0.5)
    assert b < a


def test_log_time_zero_is_smallest():
    assert LogTime.zero() < LogTime.from_float(1e-300)
    assert LogTime.from_float(0.0) == LogTime.zero()


def test_loglog_requires_time_above_one():
    with pytest.raises(DomainError):
        LogTime.from_float(0.5).loglog()
