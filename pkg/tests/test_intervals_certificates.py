import math

import pytest

from attractorlab import (
    ColorIntervalSet,
    DomainError,
    LogLambda,
    Refusal,
    SeparationCertificate,
    color_intervals,
    generate_timeline,
    overlap_report,
    separation_analysis,
)
from attractorlab.intervals import log_ratio_is_rational, tune_rational_seed
from attractorlab.maps import derived_constants
from attractorlab.numbers import TowerValue


def _synthetic():
    return ColorIntervalSet.from_tau_events([(1.0, 1.4)], [(1.1, 1.3)])


def test_two_event_colors():
    c = _synthetic()
    (w,) = c.of("white")
    (b,) = c.of("blue")
    assert (w.start, w.end) == (1.0, 1.4)
    assert (b.start, b.end) == (1.1, 1.3)
    assert c.of("black") == [] and c.of("red") == []


def test_nested_overlap_length():
    (ov,) = overlap_report(_synthetic(), ("white", "blue"), 0.1)
    assert ov.length == pytest.approx(0.2)


def test_short_overlaps_dropped():
    assert overlap_report(_synthetic(), ("white", "blue"), 0.25) == []


def test_colors_tile_the_range(biangle4, biangle6):
    t1 = generate_timeline(biangle4, 0.1, 60)
    t2 = generate_timeline(biangle6, 0.1, 60)
    c = color_intervals(t1, t2)
    for pair in (("white", "black"), ("blue", "red")):
        ivs = sorted(c.of(pair[0]) + c.of(pair[1]), key=lambda iv: iv.start)
        for a, b in zip(ivs, ivs[1:]):
            assert a.end == pytest.approx(b.start, abs=1e-12)
            assert a.color != b.color


def test_color_pitches(biangle4, biangle6):
    c = color_intervals(generate_timeline(biangle4, 0.1, 50), generate_timeline(biangle6, 0.1, 50))
    white = [iv.start for iv in c.of("white")]
    blue = [iv.start for iv in c.of("blue")]
    assert white[-1] - white[-2] == pytest.approx(1.0, abs=1e-6)
    assert blue[-1] - blue[-2] == pytest.approx(math.log(6.0) / math.log(4.0), abs=1e-6)


def test_overlaps_sorted_and_long_enough(biangle4, biangle6):
    c = color_intervals(generate_timeline(biangle4, 0.1, 300), generate_timeline(biangle6, 0.1, 300))
    rep = overlap_report(c, ("black", "red"), 0.05)
    assert rep
    assert all(o.length >= 0.05 for o in rep)
    assert [o.start for o in rep] == sorted(o.start for o in rep)


def test_log_ratio_rationality():
    assert log_ratio_is_rational(math.log(16.0) / math.log(4.0)) == (True, 2)
    ok, frac = log_ratio_is_rational(math.log(6.0) / math.log(4.0))
    assert not ok and frac is None


def test_tuned_seed_frozen(biangle4):
    from attractorlab import Biangle, SaddleParams

    b16 = Biangle(SaddleParams(4.0, 1.0, 1.0), SaddleParams(4.0, 1.0, 1.0))
    assert tune_rational_seed(biangle4, 0.1, b16) == pytest.approx(0.1778279410039004, rel=1e-9)


def test_inductive_certificate_example():
    a = [1.0, math.e, math.exp(math.e)]
    b = [2.0, math.exp(2.0), 50.0]
    cert = separation_analysis(a, b, 0.5, constants=(0.0, 0.0))
    assert isinstance(cert, SeparationCertificate)
    assert cert.mode == "InductiveTower"
    assert cert.witness == (1, 1)


def test_identical_sequences_refused():
    seq = [1.0, 2.0, 3.0]
    res = separation_analysis(seq, seq, 0.1)
    assert isinstance(res, Refusal)
    assert not res


def test_loop_sequences_numeric_tail():
    a = [5.0 * 2**n for n in range(8)]
    b = [4.0 * 2**n for n in range(8)]
    cert = separation_analysis(a, b, 0.5)
    assert cert.mode == "NumericTail"
    assert cert.index_m == 0
    assert cert.gap == 1.0


def test_non_increasing_rejected():
    with pytest.raises(DomainError):
        separation_analysis([1.0, 1.0], [2.0, 3.0], 0.5)
    with pytest.raises(DomainError):
        separation_analysis([1.0], [2.0], 0.0)


def test_certificate_on_tower_values():
    a = [TowerValue.from_float(1.0), TowerValue(3, 1.5), TowerValue(5, 1.5)]
    b = [TowerValue.from_float(3.0), TowerValue(4, 1.5), TowerValue(6, 1.5)]
    assert separation_analysis(a, b, 0.5, constants=(0.0, 0.0)).mode == "InductiveTower"


def test_inductive_certificate_sound_on_mbe_pairs(mbe):
    from attractorlab import ModifiedBowen, SaddleNodeParams, SaddleParams

    other = ModifiedBowen(SaddleNodeParams(1.0, 1.0), SaddleParams(4.0, 1.0, 1.0))
    consts = (derived_constants(mbe).C, derived_constants(other).C)
    for z1, z2 in ((0.5, 0.3), (0.1, 0.25), (0.05, 0.4)):
        t1, t2 = generate_timeline(mbe, z1, 8), generate_timeline(other, z2, 8)
        s1, s2 = t1.tau_sequence(), t2.tau_sequence()
        cert = separation_analysis(s1, s2, 0.5, constants=consts)
        if cert.mode != "InductiveTower":
            continue
        k, n = cert.witness
        # brute force on the float-representable part of the tails
        tail1 = [x.to_float() for x in s1[cert.index_m :] if x.is_plain()]
        tail2 = [x.to_float() for x in s2[cert.index_m :] if x.is_plain()]
        assert all(abs(x - y) >= 1.0 for x in tail1 for y in tail2)
