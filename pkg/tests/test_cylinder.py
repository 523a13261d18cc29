import math

import numpy as np
import pytest

from attractorlab import DomainError, ParameterOutOfArc, StripOverlapError
from attractorlab.cylinder import (
    CircleFieldFamily,
    DescentSchedule,
    VerticalProfile,
    block_end_time,
    check_strip_width,
    default_geometry,
    e1_e2_check,
    family_validate,
    flatness_check,
    h_eval,
    integrate_orbit,
    integrate_orbit_timed,
    occupancy,
    profile_eval,
    rho_tilde,
    smooth_step,
    w_eval,
)


def test_smooth_step_endpoints_and_monotone():
    xs = np.linspace(0.0, 1.0, 201)
    ys = [smooth_step(float(x)) for x in xs]
    assert ys[0] == 0.0 and ys[-1] == 1.0
    assert all(b >= a for a, b in zip(ys, ys[1:]))
    assert smooth_step(0.5) == pytest.approx(0.5)
    # flat to all orders at the ends: far below any polynomial rate
    assert smooth_step(1e-3) < 1e-100


def test_linear_branch_near_sink():
    f = CircleFieldFamily()
    assert w_eval(0.3, 0.4, f) == pytest.approx(-0.2, abs=1e-12)
    assert w_eval(0.3, 0.2, f) == pytest.approx(0.2, abs=1e-12)
    assert w_eval(0.3, 0.3, f) == 0.0


def test_default_family_validates():
    assert family_validate(CircleFieldFamily()).passed
    assert family_validate(CircleFieldFamily(delta_N=0.5)).passed


def test_validation_reports_weak_attraction():
    rep = family_validate(CircleFieldFamily(), required_rate=3.0)
    assert not rep.passed
    assert rep.violations[0][0] == "uniform-attraction"


def test_arc_meeting_north_rejected():
    with pytest.raises(ParameterOutOfArc):
        CircleFieldFamily(arc_I=(-math.pi, 0.0))


def test_sink_outside_arc_rejected():
    with pytest.raises(ParameterOutOfArc):
        CircleFieldFamily().arc_position(2.5)


def test_schedule_transition_midpoint():
    s = DescentSchedule()
    mid = h_eval(-1.5, s)  # half-way through the opening unit of block 2
    assert mid == pytest.approx(s.theta_l + smooth_step(0.5) * (s.theta_r - s.theta_l))
    assert h_eval(-0.5, s) == s.theta_l
    assert h_eval(-2.5, s) == s.theta_r
    assert h_eval(-(9.5**2), s) == s.theta_r  # block 10 is even
    assert h_eval(-(8.5**2), s) == s.theta_l


def test_descent_time_closed_form_beyond_first_block():
    v = VerticalProfile()
    for xi in (1.0, 2.0, 4.0, 37.5, 400.0):
        assert v.t_of_xi(xi) == pytest.approx(math.expm1(math.sqrt(xi)), rel=1e-13)


def test_descent_time_inside_first_block_is_increasing():
    v = VerticalProfile()
    ts = [v.t_of_xi(x) for x in np.linspace(0.0, 1.0, 50)]
    assert ts[0] == 0.0
    assert all(b > a for a, b in zip(ts, ts[1:]))
    assert ts[-1] == pytest.approx(math.e - 1.0, abs=1e-12)


def test_time_inverse():
    v = VerticalProfile()
    for s in (0.05, 0.5, 3.0, 900.0):
        assert v.s_of_t(v.t_of_s(s)) == pytest.approx(s, rel=1e-9)


def test_profile_eval_rejects_negative_depth():
    with pytest.raises(DomainError):
        profile_eval(-1.0, VerticalProfile())


def test_block_end_times():
    assert block_end_time(0) == 0.0
    assert block_end_time(4) == pytest.approx(math.e**2 - 1.0)


def test_flat_vertical_speed():
    assert rho_tilde(1e-6) == pytest.approx(2.33e-9, rel=2e-2)
    assert rho_tilde(1e-8) == pytest.approx(1.49e-37, rel=2e-2)
    assert rho_tilde(0.0) == 0.0
    d5 = flatness_check(1e-5)[1]
    d6 = flatness_check(1e-6)[1]
    assert d6 < d5 / 10.0


def test_flatness_domain():
    with pytest.raises(DomainError):
        flatness_check(0.5)
    with pytest.raises(DomainError):
        flatness_check(1e-6, order=7)


def test_alternating_sum_small_case():
    t1, t2 = math.e - 1.0, math.expm1(math.sqrt(2.0))
    r = e1_e2_check(2, [0.0, 0.0])
    assert r["E1"] == pytest.approx((t2 - 2 * t1) / t2, rel=1e-12)
    assert r["E1"] == pytest.approx(-0.103851, abs=1e-6)
    assert r["bound"] == pytest.approx(0.448075, abs=1e-6)
    assert r["holds"]


def test_alternating_sum_bound_at_400():
    r = e1_e2_check(400, [0.0] * 400)
    assert r["bound"] == pytest.approx(0.0247053, abs=1e-7)
    assert abs(r["E1"]) <= r["bound"]


def test_alpha_length_checked():
    with pytest.raises(DomainError):
        e1_e2_check(5, [0.0, 0.0])


def test_orbit_contracts_to_first_sink():
    f, s, v, _ = default_geometry()
    o = integrate_orbit(s.theta_l + 1.0, 0.0, 3.0, f, s, v, 1e-9)
    assert abs(o.theta_at_xi(0.9) - s.theta_l) < abs(o.theta_at_xi(0.3) - s.theta_l)
    # one unit of height on the plateau shrinks the distance by at least exp(-kappa)
    assert abs(o.theta_at_xi(1.0) - s.theta_l) <= math.exp(-1.0) * 1.0


def test_orbit_follows_second_sink():
    f, s, v, _ = default_geometry()
    o = integrate_orbit(s.theta_l, 0.0, 3.0, f, s, v, 1e-9)
    gap = s.theta_r - s.theta_l
    d15, d2 = (abs(o.theta_at_xi(x) - s.theta_r) for x in (1.5, 2.0))
    assert d2 < d15
    assert d2 <= gap * math.exp(-2.0)


def test_routes_agree_on_short_orbit():
    f, s, v, _ = default_geometry()
    geo = integrate_orbit(s.theta_l + 0.5, 0.0, 5.0, f, s, v, 1e-9)
    for unit in (False, True):
        timed = integrate_orbit_timed(s.theta_l + 0.5, 0.0, 5.0, f, s, v, 1e-9, unit_speed=unit)
        mask = timed.xi > 0.05
        dev = max(abs(geo.theta_at_xi(float(x)) - th) for x, th in zip(timed.xi[mask], timed.theta[mask]))
        assert dev < 1e-8


def test_integration_range_checked():
    f, s, v, _ = default_geometry()
    with pytest.raises(DomainError):
        integrate_orbit(0.0, 2.0, 1.0, f, s, v)


def test_strip_width_checked():
    f, s, _, _ = default_geometry()
    with pytest.raises(StripOverlapError):
        check_strip_width(s, f, 1.2)


def test_short_occupancy_fractions_are_fractions():
    f, s, v, eps = default_geometry()
    o = integrate_orbit(s.theta_l, 0.0, 6.0, f, s, v, 1e-9)
    occ = occupancy(o, s, v, eps, f)
    assert np.all((occ.chi_l >= 0) & (occ.chi_r >= 0))
    assert np.all(occ.chi_l + occ.chi_r <= 1.0 + 1e-12)
    assert occ.chi_at(6.0) == pytest.approx((occ.chi_l[-1], occ.chi_r[-1]))
    # the pieces with E1, E2 and E3 reproduce chi_r - chi_l at the end of every block
    n = len(occ.alpha)
    r = e1_e2_check(n, list(occ.alpha), list(occ.opposite))
    assert r["E1"] + r["E2"] + r["E3"] == pytest.approx(occ.chi_r[-1] - occ.chi_l[-1], abs=1e-12)


def test_alternating_sum_bound_fails_only_at_three_and_five():
    # block durations shrink from the first block to the second, so the
    # last-term bound is not yet available for n = 3 and n = 5
    broken = [n for n in range(1, 2001) if not e1_e2_check(n, [0.0] * n)["holds"]]
    assert broken == [3, 5]
