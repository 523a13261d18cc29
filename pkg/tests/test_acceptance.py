"""Acceptance suite: one test per numbered criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v``.  The cylinder pair
criterion integrates 40 orbits to depth 400 and dominates the runtime.
"""

import math
import time
from functools import lru_cache

import numpy as np
import pytest

from attractorlab import (
    Biangle,
    LogLambda,
    ModifiedBowen,
    SaddleNodeParams,
    SaddleParams,
    generate_timeline,
    geometric_ratios,
    overlap_report,
    poincare_step,
    recurrence_residuals,
    saddle_local,
    saddle_oracle,
)
from attractorlab.cylinder import (
    default_geometry,
    e1_e2_check,
    flatness_check,
    integrate_orbit,
    integrate_orbit_timed,
    occupancy,
    rho_tilde,
)
from attractorlab.intervals import ColorIntervalSet, log_ratio_is_rational, tune_rational_seed
from attractorlab.maps import derived_constants
from attractorlab.measures import RegionSystem, TimelineSource, accumulate, estimate_attractors
from attractorlab.scenarios import apply_overrides, load_config, mbe_pair_trial, member_rngs, run_scenario
from attractorlab.timelines import gamma_hat_log, mbe_tau_gaps, tau_floats

ROOT_SEED = 20240601
SQUARE = SaddleParams(2.0, 1.0, 1.0)
BIANGLE_4 = Biangle(SQUARE, SQUARE)
BIANGLE_6 = Biangle(SQUARE, SaddleParams(3.0, 1.0, 1.0))
BIANGLE_16 = Biangle(SaddleParams(4.0, 1.0, 1.0), SaddleParams(4.0, 1.0, 1.0))
MBE = ModifiedBowen(SaddleNodeParams(1.0, 1.0), SQUARE)
# residuals are sums of O(1) terms, so their absolute rounding is a few 1e-16
NOISE_FLOOR = 1e-15


def _mbe_seeds(n: int = 20) -> list[float]:
    rng = np.random.default_rng(ROOT_SEED)
    return [float(z) for z in rng.uniform(0.02, 0.5, n)]


# --- biangle --------------------------------------------------------------------------


def test_criterion_01_biangle_geometric_law(criterion):
    start = time.perf_counter()
    t = generate_timeline(BIANGLE_4, 0.1, 501)
    ratios = geometric_ratios(t)
    elapsed = time.perf_counter() - start
    dc = derived_constants(BIANGLE_4)
    window = ratios[11:500]  # entries k = 12 .. 500
    worst_a = max(abs(a / dc.Lambda - 1.0) for a, _ in window)
    worst_b = max(abs(b / dc.Lambda0 - 1.0) for _, b in window)
    ok = worst_a < 0.01 and worst_b < 0.01 and elapsed < 1.0 and len(window) == 489
    assert criterion(1, ok, f"max|ratio_A/4-1|={worst_a:.2e} max|ratio_B/2-1|={worst_b:.2e} runtime={elapsed:.3f}s")


def test_criterion_02_biangle_cocycle(criterion):
    z0 = 0.1
    k = 40
    g0 = gamma_hat_log(generate_timeline(BIANGLE_4, z0, k + 1), k)
    g1 = gamma_hat_log(generate_timeline(BIANGLE_4, poincare_step(z0, BIANGLE_4).next, k + 1), k)
    factor = math.exp(g1 - g0)
    err = abs(factor - derived_constants(BIANGLE_4).Lambda)
    assert criterion(2, err < 1e-6, f"gamma(P z0)/gamma(z0)={factor:.12f} |diff from Lambda|={err:.2e}")


# --- saddle-node biangle --------------------------------------------------------------


def test_criterion_03_mbe_recurrence(criterion):
    bad = []
    for z in _mbe_seeds():
        r = [x.value for x in recurrence_residuals(generate_timeline(MBE, z, 8)) if not x.asymptotic]
        shrinking = all(abs(b) < abs(a) or max(abs(a), abs(b)) <= NOISE_FLOOR for a, b in zip(r, r[1:]))
        if not (shrinking and abs(r[-1]) < 1e-2):
            bad.append((round(z, 4), [float(f"{x:.3g}") for x in r]))
    detail = f"{20 - len(bad)}/20 seeds with decreasing |r_n| and |r_last|<1e-2"
    if bad:
        detail += f"; failing (seed, residuals): {bad}"
    assert criterion(3, not bad, detail)


def test_criterion_04_mbe_tau_gap(criterion):
    bad = []
    for z in _mbe_seeds():
        g = mbe_tau_gaps(generate_timeline(MBE, z, 8))
        if not (len(g) >= 2 and all(x > 0 for x in g) and all(b < a for a, b in zip(g, g[1:]))):
            bad.append((round(z, 4), g))
    assert criterion(4, not bad, f"{20 - len(bad)}/20 seeds with positive decreasing tau-gaps" + (f"; failing {bad}" if bad else ""))


@lru_cache(maxsize=None)
def _mbe_square_trials():
    rngs = member_rngs(ROOT_SEED, 50)
    return tuple(mbe_pair_trial(MBE, MBE, r, (0.02, 0.5), 8, 4, 0.5) for r in rngs)


def _pair_estimate(trials):
    legs = RegionSystem.legs()
    table = {id(t.source): list(t.horizons) for t in trials}
    return estimate_attractors([t.source for t in trials], legs.product(legs), lambda s: table[id(s)], 0.05, min_ensemble=1)


def test_criterion_05_mbe_square_synchronization(criterion):
    trials = _mbe_square_trials()
    worst = max(t.bb_fraction for t in trials)
    fired = sum(getattr(t.certificate, "mode", "") == "InductiveTower" for t in trials)
    distinct = all(not math.isclose(t.z1, t.z2, rel_tol=1e-12) for t in trials)
    est = _pair_estimate(trials)
    expected = {("A", "A"), ("A", "B"), ("B", "A")}
    ok = worst < 0.05 and fired >= 45 and set(est.statistical_cells) == expected and distinct
    cells = sorted("".join(c) for c in est.statistical_cells)
    reseeded = sum(t.reseeded for t in trials)
    assert criterion(5, ok, f"max (B,B) fraction={worst:.3e} certificates={fired}/50 (reseeded {reseeded}) statistical={cells}")


# --- loop -----------------------------------------------------------------------------


def test_criterion_06_loop_square(criterion, tmp_path):
    cfg = apply_overrides(load_config(kind="loop-square"), ["count=20"])
    man = run_scenario(cfg, tmp_path)
    rows = (tmp_path / "gaps.csv").read_text().splitlines()[1:]
    min_final = min(float(r.split(",")[3]) for r in rows)
    K = cfg["model"]["return_time"]
    ok = man.status == "ok" and len(rows) == 20 and all(man.verdicts.values())
    assert criterion(6, ok, f"{man.verdicts} min final gap={min_final:.4g} (>100K={100 * K:g})")


# --- biangle products -----------------------------------------------------------------


def _overlap_counts(first, second, z1, z2, turns, pairs, min_len=0.05):
    t1 = generate_timeline(first, z1, turns)
    t2 = generate_timeline(second, z2, turns)
    scale = LogLambda(derived_constants(first).Lambda)
    f1 = tau_floats(t1, scale)
    end = f1[-1][1]
    f2 = [r for r in tau_floats(t2, scale) if r[1] <= end]
    colors = ColorIntervalSet.from_tau_events(f1, f2)
    return {p: overlap_report(colors, p, min_len) for p in pairs}


def test_criterion_07_biangle_products(criterion):
    pairs = [(a, b) for a in ("white", "black") for b in ("blue", "red")]
    c2000 = {p: len(v) for p, v in _overlap_counts(BIANGLE_4, BIANGLE_6, 0.1, 0.1, 2000, pairs).items()}
    c4000 = {p: len(v) for p, v in _overlap_counts(BIANGLE_4, BIANGLE_6, 0.1, 0.1, 4000, pairs).items()}
    irrational = not log_ratio_is_rational(math.log(6.0) / math.log(4.0))[0]
    ok_irr = irrational and all(c2000[p] >= 20 and c4000[p] > c2000[p] for p in pairs)

    rational, ratio = log_ratio_is_rational(math.log(16.0) / math.log(4.0))
    z2 = tune_rational_seed(BIANGLE_4, 0.1, BIANGLE_16)
    wb = ("white", "blue")
    r2000 = _overlap_counts(BIANGLE_4, BIANGLE_16, 0.1, z2, 2000, [wb])[wb]
    r4000 = _overlap_counts(BIANGLE_4, BIANGLE_16, 0.1, z2, 4000, [wb])[wb]
    starts = [o.start for o in r4000[-50:]]
    spacing = np.diff(starts) if len(starts) > 1 else np.array([0.0])
    # recurrence: overlaps keep coming at the rational pitch
    ok_rat = rational and ratio == 2 and len(r2000) > 0 and len(r4000) > len(r2000) and np.allclose(spacing, float(ratio), atol=1e-6)
    counts = ", ".join(f"{a}-{b}:{c2000[(a, b)]}->{c4000[(a, b)]}" for a, b in pairs)
    detail = f"irrational {counts}; rational log ratio={ratio} tuned z={z2:.10f} white-blue {len(r2000)}->{len(r4000)} pitch={spacing.mean():.6f}"
    assert criterion(7, ok_irr and ok_rat, detail)


# --- cylinder -------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _reference_orbit():
    f, s, v, eps = default_geometry()
    start = time.perf_counter()
    orbit = integrate_orbit(s.theta_l, 0.0, 400.0, f, s, v, 1e-9)
    occ = occupancy(orbit, s, v, eps, f)
    return orbit, occ, time.perf_counter() - start


def test_criterion_08_cylinder_single_orbit(criterion):
    _, s, v, _ = default_geometry()
    orbit, occ, elapsed = _reference_orbit()
    cl, cr = float(occ.chi_l[-1]), float(occ.chi_r[-1])
    ok_chi = abs(cl - 0.5) < 0.05 and abs(cr - 0.5) < 0.05 and cl + cr > 0.9
    grid = np.linspace(1.0, 400.0, 800)
    t_err = max(abs(v.t_of_xi(float(x)) / math.expm1(math.sqrt(x)) - 1.0) for x in grid)
    n = len(occ.alpha)
    at_depth = e1_e2_check(n, [0.0] * n)
    slack = at_depth["bound"] - abs(at_depth["E1"])
    elsewhere = [k for k in range(1, n) if not e1_e2_check(k, [0.0] * k)["holds"]]
    parts = e1_e2_check(n, list(occ.alpha), list(occ.opposite))
    split_err = abs(parts["E1"] + parts["E2"] + parts["E3"] - (cr - cl))
    ok = ok_chi and t_err < 1e-13 and slack >= 0.0 and split_err < 1e-12 and elapsed < 30.0
    detail = (
        f"xi={occ.xi_grid[-1]:.0f} chi_l={cl:.5f} chi_r={cr:.5f} max rel err t(xi)={t_err:.1e} "
        f"n={n} bound-|E1|={slack:.3e} (bound fails only at n={elsewhere}) |E1+E2+E3-(chi_r-chi_l)|={split_err:.1e} runtime={elapsed:.2f}s"
    )
    assert criterion(8, ok, detail)


def test_criterion_09_cylinder_pairs(criterion, tmp_path):
    cfg = load_config(kind="cylinder-square")
    man = run_scenario(cfg, tmp_path)
    rows = [r.split(",") for r in (tmp_path / "pairs.csv").read_text().splitlines()[1:]]
    ll = [float(r[2]) for r in rows]
    rr = [float(r[3]) for r in rows]
    off = [float(r[4]) + float(r[5]) for r in rows]
    ok = man.status == "ok" and len(rows) == 20 and all(man.verdicts.values())
    detail = (
        f"{man.verdicts} S_LL in [{min(ll):.4f},{max(ll):.4f}] S_RR in [{min(rr):.4f},{max(rr):.4f}] "
        f"max S_LR+S_RL={max(off):.2e} tol={cfg['tol']:g} runtime={man.wall_clock:.0f}s"
    )
    assert criterion(9, ok, detail)


def test_criterion_10_rho_independence(criterion):
    f, s, v, _ = default_geometry()
    tol = 1e-9
    theta0 = s.theta_l + 0.7
    geo = integrate_orbit(theta0, 0.0, 400.0, f, s, v, tol)
    devs = {}
    for unit in (False, True):
        timed = integrate_orbit_timed(theta0, 0.0, 400.0, f, s, v, tol, unit_speed=unit)
        devs["rho=1" if unit else "true rho"] = max(
            abs(geo.theta_at_xi(float(x)) - th) for x, th in zip(timed.xi, timed.theta)
        )
        devs["rho=1 xi_end" if unit else "true rho xi_end"] = abs(float(timed.xi[-1]) - 400.0)
    worst = max(devs[k] for k in ("rho=1", "true rho"))
    ok = worst < 10 * tol and all(devs[k] < 10 * tol for k in devs)
    assert criterion(10, ok, " ".join(f"{k}: {d:.2e}" for k, d in devs.items()) + f" (limit {10 * tol:.0e})")


# --- oracle, estimators, flatness -----------------------------------------------------


def test_criterion_11_oracle_equivalence(criterion):
    grid = np.geomspace(1e-6, 0.9, 50)
    worst = 0.0
    for p in (SaddleParams(3.0, 2.0, 1.0), SaddleParams(2.0, 1.0, 1.0)):
        for x in grid:
            img, t = saddle_local(float(x), p)
            oi, ot = saddle_oracle(float(x), p, check=False)
            worst = max(worst, abs(oi - img) / img, abs(ot - t) / t)
    assert criterion(11, worst < 1e-6, f"max relative error over 2x50 grid points={worst:.2e}")


def test_criterion_12_hierarchy_and_marginals(criterion):
    estimates = {}
    legs = RegionSystem.legs()
    singles = [TimelineSource(generate_timeline(MBE, z, 8)) for z in np.random.default_rng(1).uniform(0.02, 0.5, 30)]
    estimates["mbe"] = estimate_attractors(singles, legs, lambda src: src.turn_horizons([1, 2, 3, 4]), 0.05)
    trials = _mbe_square_trials()
    estimates["mbe x mbe"] = _pair_estimate(trials)
    other = ModifiedBowen(SaddleNodeParams(1.0, 1.0), SaddleParams(4.0, 1.0, 1.0))
    mixed = tuple(mbe_pair_trial(MBE, other, r, (0.02, 0.5)) for r in member_rngs(ROOT_SEED + 1, 30))
    estimates["mbe x mbe'"] = _pair_estimate(mixed)
    nested = {k: e.minimal_cells <= e.statistical_cells <= e.milnor_cells for k, e in estimates.items()}

    exact = True
    checked = 0
    for t in trials + mixed:
        first, second = t.source.first, t.source.second
        for h in t.horizons:
            joint = accumulate(t.source, legs.product(legs), h)
            exact &= joint.marginal(0) == accumulate(first, legs, h).weights
            exact &= joint.marginal(1) == accumulate(second, legs, h).weights
            checked += 1
    ok = all(nested.values()) and exact
    assert criterion(12, ok, f"nested={nested} marginals exact on {checked} product histograms: {exact}")


def test_criterion_13_flatness(criterion):
    r6, r8 = rho_tilde(1e-6), rho_tilde(1e-8)
    d5 = flatness_check(1e-5)[1]
    d6 = flatness_check(1e-6)[1]
    ok = r6 < 1e-8 and r8 < 1e-30 and d6 * 10.0 <= d5
    assert criterion(13, ok, f"rho(1e-6)={r6:.3e} rho(1e-8)={r8:.3e} |D1| at 1e-5={d5:.3e} at 1e-6={d6:.3e} ratio={d5 / d6:.1f}")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
