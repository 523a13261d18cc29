from fractions import Fraction

import numpy as np
import pytest

from attractorlab import DomainError, HierarchyViolation, generate_timeline
from attractorlab.measures import (
    AttractorEstimate,
    OscillationRefusal,
    ProductSource,
    RegionSystem,
    TimelineSource,
    accumulate,
    estimate_attractors,
    oscillation_detect,
    physical_weights,
)


def _mbe_sources(mbe, n=30, seed=7):
    rng = np.random.default_rng(seed)
    return [TimelineSource(generate_timeline(mbe, float(z), 8)) for z in rng.uniform(0.02, 0.5, n)]


def test_region_names_distinct():
    with pytest.raises(DomainError):
        RegionSystem("bad", ("A", "A"))


def test_unknown_label_rejected():
    with pytest.raises(DomainError):
        RegionSystem.legs().region_of("Z")


def test_single_region_collects_labels():
    r = RegionSystem.single(["A", "B"])
    assert r.region_of("A") == r.region_of("B") == "all"


def test_loop_weights_exact(loop2):
    src = TimelineSource(generate_timeline(loop2, zeta0=5.0, n_turns=3))
    hist = accumulate(src, RegionSystem.legs(), src.timeline.stamps_b[1])
    # A legs [0, 5] and [6, 16], B leg [5, 6], horizon 16
    assert hist.weights["A"] == Fraction(15, 16)
    assert hist.weights["B"] == Fraction(1, 16)
    assert hist.total() == 1


def test_mbe_b_share_swings(mbe):
    src = TimelineSource(generate_timeline(mbe, 0.3, 8))
    t = src.timeline
    legs = RegionSystem.legs()
    # the last turn dominates: its saddle leg is the share b / (b + lambda) of it
    assert accumulate(src, legs, t.stamps_a[4])["B"] == pytest.approx(0.5, abs=1e-12)
    assert accumulate(src, legs, t.stamps_b[4])["B"] < 1e-12
    assert accumulate(src, legs, t.stamps_a[2])["B"] == pytest.approx(0.48085186, abs=1e-8)


def test_mbe_single_flow_attractors(mbe):
    srcs = _mbe_sources(mbe)
    est = estimate_attractors(srcs, RegionSystem.legs(), lambda s: s.turn_horizons([1, 2, 3, 4]), 0.05)
    assert est.statistical_cells == {"A", "B"}
    assert est.minimal_cells == {"A"}
    assert est.milnor_cells == {"A", "B"}


def test_product_marginals_exact(mbe):
    t1 = generate_timeline(mbe, 0.45, 8)
    t2 = generate_timeline(mbe, 0.12, 8)
    legs = RegionSystem.legs()
    prod = legs.product(legs)
    h = min(t1.stamps_a[4], t2.stamps_a[4])
    joint = accumulate(ProductSource(TimelineSource(t1), TimelineSource(t2)), prod, h)
    assert joint.marginal(0) == accumulate(TimelineSource(t1), legs, h).weights
    assert joint.marginal(1) == accumulate(TimelineSource(t2), legs, h).weights


def test_marginal_needs_product(mbe):
    hist = accumulate(TimelineSource(generate_timeline(mbe, 0.3, 5)), RegionSystem.legs(), 10.0)
    with pytest.raises(DomainError):
        hist.marginal(0)


def test_estimator_preconditions(mbe):
    srcs = _mbe_sources(mbe, n=5)
    sched = lambda s: s.turn_horizons([1, 2, 3, 4])
    with pytest.raises(DomainError):
        estimate_attractors(srcs, RegionSystem.legs(), sched)
    with pytest.raises(DomainError):
        estimate_attractors(srcs, RegionSystem.legs(), sched, 0.7, min_ensemble=1)
    with pytest.raises(DomainError):
        estimate_attractors(srcs, RegionSystem.legs(), sched, rule="mean", min_ensemble=1)
    with pytest.raises(DomainError):
        estimate_attractors(srcs, RegionSystem.legs(), lambda s: s.turn_horizons([1, 2]), min_ensemble=1)


def test_raising_threshold_never_adds_cells(mbe):
    srcs = _mbe_sources(mbe, n=10)
    sched = lambda s: s.turn_horizons([1, 2, 3, 4])
    prev = None
    for thr in (0.01, 0.05, 0.2, 0.45):
        est = estimate_attractors(srcs, RegionSystem.legs(), sched, thr, min_ensemble=1)
        if prev is not None:
            assert est.statistical_cells <= prev.statistical_cells
            assert est.minimal_cells <= prev.minimal_cells
        prev = est


def test_hierarchy_violation_detected():
    bad = AttractorEstimate(frozenset({"A"}), frozenset({"A"}), frozenset({"A", "B"}), 0.05, "limsup")
    with pytest.raises(HierarchyViolation):
        bad.check_hierarchy()


def test_physical_weights_of_loop(loop2):
    src = TimelineSource(generate_timeline(loop2, zeta0=5.0, n_turns=30))
    pw = physical_weights(src, RegionSystem.legs(), src.turn_horizons(range(10, 31)))
    # the B leg has constant length while the A legs double: all weight ends on A
    assert pw.final()["A"] > 0.999
    assert pw.oscillation < 1e-3


def test_oscillation_detected_on_alternating_ensemble():
    times = list(range(12))
    left = [0.99, 0.99, 0.1, 0.0, 0.98, 0.5, 0.0, 0.0, 0.97, 0.2, 0.0, 0.99]
    right = [1.0 - x for x in left]
    res = oscillation_detect(times, left, right, 0.05)
    ls, rs = res
    assert ls == [0, 4, 8, 11] and rs == [3, 6, 10]
    merged = sorted([(t, "L") for t in ls] + [(t, "R") for t in rs])
    assert all(a[1] != b[1] for a, b in zip(merged, merged[1:]))


def test_oscillation_refused_without_crowding():
    res = oscillation_detect([0, 1, 2], [0.5, 0.6, 0.5], [0.5, 0.4, 0.5], 0.05)
    assert isinstance(res, OscillationRefusal) and not res


def test_oscillation_preconditions():
    with pytest.raises(DomainError):
        oscillation_detect([0], [1.0], [0.0], 1.5)
    with pytest.raises(DomainError):
        oscillation_detect([0], [1.0], [0.0], 0.1, ensemble_size=10)
