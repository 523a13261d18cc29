"""Declarative experiments: configuration, deterministic seeding, execution and manifests."""

from __future__ import annotations

import copy
import hashlib
import json
import math
import os
import time
import traceback
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Optional

import numpy as np

from . import __version__
from .certificates import SeparationCertificate, separation_analysis
from .cylinder import (
    CircleFieldFamily,
    DescentSchedule,
    VerticalProfile,
    integrate_orbit,
    occupancy,
    pair_occupancy,
)
from .errors import AttractorLabError, ConfigError
from .intervals import ColorIntervalSet, overlap_report
from .maps import (
    Biangle,
    Loop,
    ModifiedBowen,
    SaddleNodeParams,
    SaddleParams,
    derived_constants,
    poincare_step,
)
from .measures import (
    OrbitSource,
    ProductSource,
    RegionSystem,
    TimelineSource,
    estimate_attractors,
    physical_weights,
)
from .numbers import LogTime
from .reporting import interval_rows, timeline_rows, write_csv, write_json
from .timelines import (
    LnLn,
    LogLambda,
    generate_timeline,
    geometric_ratios,
    loop_divergence,
    simultaneous_fraction,
    simultaneous_fractions,
    tau_floats,
)

__all__ = [
    "KINDS",
    "DEFAULTS",
    "RunManifest",
    "load_config",
    "apply_overrides",
    "validate_config",
    "run_scenario",
    "emit_report",
    "config_hash",
    "member_rngs",
    "output_root",
    "mbe_pair_trial",
]

KINDS = (
    "biangle-square",
    "mbe-square",
    "loop-square",
    "mbe-times-mbe",
    "mbe-times-biangle",
    "cylinder",
    "cylinder-square",
)

_SADDLE_2 = {"mu": 2.0, "lambda": 1.0, "c": 1.0}
_MBE = {"a": 1.0, "b": 1.0, "saddle": dict(_SADDLE_2)}

DEFAULTS: dict[str, dict] = {
    "biangle-square": {
        "model": {"saddle_a": dict(_SADDLE_2), "saddle_b": dict(_SADDLE_2)},
        "second": {"saddle_a": dict(_SADDLE_2), "saddle_b": {"mu": 3.0, "lambda": 1.0, "c": 1.0}},
        "seeds": {"z0": 0.1, "z1": 0.1},
        "n_turns": 2000,
        "min_len": 0.05,
        "min_overlaps": 20,
        "ratio_tol": 0.01,
    },
    "mbe-square": {
        "model": copy.deepcopy(_MBE),
        "second": copy.deepcopy(_MBE),
        "count": 50,
        "band": [0.02, 0.5],
        "n_turns": 8,
        "horizon_turn": 4,
        "eps": 0.5,
        "threshold": 0.05,
        "fraction_limit": 0.05,
        "min_fired": 45,
    },
    "mbe-times-mbe": {
        "model": copy.deepcopy(_MBE),
        "second": {"a": 1.0, "b": 1.0, "saddle": {"mu": 4.0, "lambda": 1.0, "c": 1.0}},
        "count": 50,
        "band": [0.02, 0.5],
        "n_turns": 8,
        "horizon_turn": 4,
        "eps": 0.5,
        "threshold": 0.05,
        "fraction_limit": 0.05,
        "min_fired": 45,
    },
    "loop-square": {
        "model": {"saddle": dict(_SADDLE_2), "return_time": 1.0},
        "count": 20,
        "band": [5.0, 10.0],
        "n_turns": 12,
    },
    "mbe-times-biangle": {
        "model": copy.deepcopy(_MBE),
        "second": {"saddle_a": dict(_SADDLE_2), "saddle_b": dict(_SADDLE_2)},
        "seeds": {"z0": 0.3, "z1": 0.1},
        "n_turns": 4,
        "biangle_turns": 4000,
        "min_len": 1e-4,
        "threshold": 0.1,
    },
    "cylinder": {
        "geometry": {"theta_north": math.pi, "delta_N": 0.6, "theta_l": -math.pi / 3, "theta_r": math.pi / 3, "kappa": 1.0},
        "epsilon": 0.1,
        "theta0": None,
        "xi_max": 400.0,
        "tol": 1e-9,
        "tolerance": 0.05,
    },
    "cylinder-square": {
        "geometry": {"theta_north": math.pi, "delta_N": 0.6, "theta_l": -math.pi / 3, "theta_r": math.pi / 3, "kappa": 1.0},
        "epsilon": 0.1,
        "count": 20,
        "offset_band": [0.0, 2.0],
        "xi_max": 400.0,
        "tol": 1e-7,
        "tolerance": 0.05,
    },
}

_COMMON = {"seed": 20240601, "workers": 1, "out": None}


# --- configuration ----------------------------------------------------------------------


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def load_config(path: Optional[Path] = None, kind: Optional[str] = None) -> dict:
    """Read a TOML scenario and fill in the defaults of its kind."""
    raw: dict = {}
    if path is not None:
        import tomli

        with open(path, "rb") as fh:
            raw = tomli.load(fh)
    kind = raw.get("kind", kind)
    if kind not in KINDS:
        raise ConfigError(f"scenario kind must be one of {KINDS}, got {kind!r}")
    cfg = _merge(_merge(_COMMON, DEFAULTS[kind]), raw)
    cfg["kind"] = kind
    return cfg


def _parse_value(text: str) -> Any:
    import tomli

    try:
        return tomli.loads(f"v = {text}")["v"]
    except tomli.TOMLDecodeError:
        return text


def apply_overrides(cfg: dict, assignments: list[str]) -> dict:
    """Apply ``key.sub=value`` overrides; values use TOML syntax, bare words are strings."""
    out = copy.deepcopy(cfg)
    for item in assignments:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, text = item.split("=", 1)
        parts = key.strip().split(".")
        node = out
        for p in parts[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override path {key!r} crosses a non-table value")
        node[parts[-1]] = _parse_value(text.strip())
    return out


def _saddle(d: dict) -> SaddleParams:
    return SaddleParams(float(d["mu"]), float(d["lambda"]), float(d.get("c", 1.0)))


def _biangle(d: dict) -> Biangle:
    return Biangle(_saddle(d["saddle_a"]), _saddle(d["saddle_b"]))


def _mbe(d: dict) -> ModifiedBowen:
    return ModifiedBowen(SaddleNodeParams(float(d["a"]), float(d["b"])), _saddle(d["saddle"]))


def _loop(d: dict) -> Loop:
    return Loop(_saddle(d["saddle"]), float(d.get("return_time", 1.0)))


def _geometry(d: dict):
    f = CircleFieldFamily(theta_north=float(d["theta_north"]), kappa=float(d["kappa"]), delta_N=float(d["delta_N"]))
    s = DescentSchedule(float(d["theta_l"]), float(d["theta_r"]))
    f.arc_position(s.theta_l)
    f.arc_position(s.theta_r)
    return f, s, VerticalProfile()


def validate_config(cfg: dict) -> dict:
    """Build every model in the configuration, turning invariant failures into ``ConfigError``."""
    kind = cfg.get("kind")
    if kind not in KINDS:
        raise ConfigError(f"unknown scenario kind {kind!r}")
    try:
        built: dict = {}
        if kind == "biangle-square":
            built["first"], built["second"] = _biangle(cfg["model"]), _biangle(cfg["second"])
        elif kind in ("mbe-square", "mbe-times-mbe"):
            built["first"], built["second"] = _mbe(cfg["model"]), _mbe(cfg["second"])
            derived_constants(built["first"])
            derived_constants(built["second"])
        elif kind == "loop-square":
            built["first"] = _loop(cfg["model"])
        elif kind == "mbe-times-biangle":
            built["first"], built["second"] = _mbe(cfg["model"]), _biangle(cfg["second"])
        else:
            built["geometry"] = _geometry(cfg["geometry"])
        if "count" in cfg and int(cfg["count"]) < 1:
            raise ConfigError("seed count must be at least 1")
        return built
    except ConfigError:
        raise
    except (AttractorLabError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {kind} configuration: {exc}") from exc


def config_hash(cfg: dict) -> str:
    canon = {k: v for k, v in cfg.items() if k not in ("out", "workers")}
    return hashlib.sha256(json.dumps(canon, sort_keys=True, default=str).encode()).hexdigest()


def member_rngs(root_seed: int, count: int) -> list[np.random.Generator]:
    """Independent counter-based generators, one per ensemble member, from one root seed."""
    children = np.random.SeedSequence(int(root_seed)).spawn(count)
    return [np.random.Generator(np.random.Philox(c)) for c in children]


def output_root(cfg: dict) -> Path:
    env = os.environ.get("ATTRACTORLAB_OUT")
    if env:
        return Path(env)
    return Path(cfg.get("out") or "attractorlab-runs")


def _map(fn: Callable, items: list, workers: int) -> list:
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# --- manifest ---------------------------------------------------------------------------


@dataclass
class RunManifest:
    kind: str
    config_hash: str
    version: str
    config: dict
    outputs: dict = field(default_factory=dict)
    verdicts: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)
    status: str = "ok"
    error: Optional[dict] = None
    wall_clock: float = 0.0
    directory: Optional[str] = None

    @property
    def passed(self) -> bool:
        return self.status == "ok" and all(self.verdicts.values())

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "config_hash": self.config_hash,
            "version": self.version,
            "config": self.config,
            "outputs": self.outputs,
            "verdicts": self.verdicts,
            "summary": self.summary,
            "status": self.status,
            "error": self.error,
            "wall_clock": self.wall_clock,
        }

    @classmethod
    def from_json(cls, d: dict, directory: Optional[str] = None) -> RunManifest:
        return cls(
            d["kind"],
            d["config_hash"],
            d["version"],
            d["config"],
            d.get("outputs", {}),
            d.get("verdicts", {}),
            d.get("summary", {}),
            d.get("status", "ok"),
            d.get("error"),
            d.get("wall_clock", 0.0),
            directory,
        )


# --- experiments ------------------------------------------------------------------------


def _on_same_orbit(m, z1: float, z2: float, turns: int = 6) -> bool:
    lo, hi = sorted((z1, z2))
    x = hi
    for _ in range(turns):
        if math.isclose(x, lo, rel_tol=1e-12):
            return True
        try:
            x = poincare_step(x, m).next
        except AttractorLabError:
            break
    return False


@dataclass(frozen=True)
class PairTrial:
    z1: float
    z2: float
    bb_fraction: float
    certificate: Any
    reseeded: bool
    source: ProductSource
    horizons: tuple


def mbe_pair_trial(
    m1: ModifiedBowen,
    m2: ModifiedBowen,
    rng: np.random.Generator,
    band: tuple,
    n_turns: int = 8,
    horizon_turn: int = 4,
    eps: float = 0.5,
) -> PairTrial:
    """One seed pair of an MBE product: separation certificate, joint fraction in ``(B, B)``, schedule.

    When the two double-log sequences interleave too closely for the
    inductive certificate, the second seed is redrawn once.
    """
    lo, hi = band
    consts = (derived_constants(m1).C, derived_constants(m2).C)

    def draw():
        while True:
            z1, z2 = rng.uniform(lo, hi, 2)
            if not (m1 == m2 and _on_same_orbit(m1, z1, z2)):
                return float(z1), float(z2)

    z1, z2 = draw()
    reseeded = False
    for attempt in range(2):
        t1 = generate_timeline(m1, z1, n_turns, label="first")
        t2 = generate_timeline(m2, z2, n_turns, label="second")
        cert = separation_analysis(t1.tau_sequence(), t2.tau_sequence(), eps, constants=consts)
        if isinstance(cert, SeparationCertificate) and cert.mode == "InductiveTower":
            break
        if attempt == 0:
            z2 = float(rng.uniform(lo, hi))
            reseeded = True
    ha = [t1.stamps_a[k] for k in range(1, horizon_turn + 1)]
    hb = [t2.stamps_a[k] for k in range(1, horizon_turn + 1)]
    final = max(ha[-1], hb[-1])
    horizons = tuple(sorted(set(h for h in ha + hb if not final < h)))
    bb = simultaneous_fraction(t1, t2, ("B", "B"), final)
    return PairTrial(z1, z2, bb, cert, reseeded, ProductSource(TimelineSource(t1), TimelineSource(t2)), horizons)


def _pair_schedule(trials: list[PairTrial]) -> Callable:
    table = {id(t.source): list(t.horizons) for t in trials}
    return lambda src: table[id(src)]


def _run_mbe_pairs(cfg: dict, built: dict, out: Path, man: RunManifest) -> None:
    m1, m2 = built["first"], built["second"]
    rngs = member_rngs(cfg["seed"], int(cfg["count"]))
    band = tuple(cfg["band"])
    trials = _map(
        lambda r: mbe_pair_trial(m1, m2, r, band, int(cfg["n_turns"]), int(cfg["horizon_turn"]), float(cfg["eps"])),
        rngs,
        int(cfg["workers"]),
    )
    rows = []
    fired = 0
    for i, t in enumerate(trials):
        mode = getattr(t.certificate, "mode", "Refusal")
        fired += mode == "InductiveTower"
        w = getattr(t.certificate, "witness", None) or (None, None)
        rows.append((i, t.z1, t.z2, t.bb_fraction, mode, w[0] if w[0] is not None else "", w[1] if w[1] is not None else "", int(t.reseeded)))
    man.outputs["pairs"] = str(write_csv(out / "pairs.csv", ["pair", "z1", "z2", "frac_BB", "certificate", "witness_k", "witness_n", "reseeded"], rows).name)
    regions = RegionSystem.legs().product(RegionSystem.legs())
    est = estimate_attractors([t.source for t in trials], regions, _pair_schedule(trials), float(cfg["threshold"]), min_ensemble=1)
    expected = {("A", "A"), ("A", "B"), ("B", "A")}
    man.summary.update(
        {
            "statistical_cells": sorted(est.statistical_cells),
            "minimal_cells": sorted(est.minimal_cells),
            "milnor_cells": sorted(est.milnor_cells),
            "fired": fired,
            "max_frac_BB": max(t.bb_fraction for t in trials),
        }
    )
    man.outputs["estimate"] = str(write_json(out / "estimate.json", man.summary).name)
    man.verdicts["bb_fraction_small"] = all(t.bb_fraction < float(cfg["fraction_limit"]) for t in trials)
    man.verdicts["certificates_fired"] = fired >= min(int(cfg["min_fired"]), len(trials))
    man.verdicts["statistical_cells_three"] = set(est.statistical_cells) == expected


def _run_biangle(cfg: dict, built: dict, out: Path, man: RunManifest) -> None:
    b1, b2 = built["first"], built["second"]
    n = int(cfg["n_turns"])
    t1 = generate_timeline(b1, float(cfg["seeds"]["z0"]), n, label="first")
    t2 = generate_timeline(b2, float(cfg["seeds"]["z1"]), n, label="second")
    ratios = geometric_ratios(t1)
    man.outputs["timeline"] = write_csv(out / "timeline.csv", ["k", "logT_kA", "logT_kB", "tier"], timeline_rows(t1)).name
    man.outputs["ratios"] = write_csv(out / "ratios.csv", ["k", "ratio_A", "ratio_B"], [(k + 1, a, b) for k, (a, b) in enumerate(ratios)]).name
    scale = LogLambda(derived_constants(b1).Lambda)
    f1 = tau_floats(t1, scale)
    end = f1[-1][1]
    f2 = [r for r in tau_floats(t2, scale) if r[1] <= end]
    colors = ColorIntervalSet.from_tau_events(f1, f2, ("first", "second"))
    man.outputs["colors"] = write_csv(out / "colors.csv", ["color", "tau_start", "tau_end"], interval_rows(colors)).name
    counts = {}
    for a in ("white", "black"):
        for b in ("blue", "red"):
            counts[f"{a}-{b}"] = len(overlap_report(colors, (a, b), float(cfg["min_len"])))
    man.outputs["overlaps"] = write_csv(out / "overlaps.csv", ["pair", "count"], sorted(counts.items())).name
    dc = derived_constants(b1)
    tol = float(cfg["ratio_tol"])
    tail = ratios[min(11, len(ratios) - 1) :]
    man.summary.update({"Lambda": dc.Lambda, "Lambda0": dc.Lambda0, "overlaps": counts, "last_ratio": ratios[-1]})
    man.verdicts["ratio_A_converges"] = all(abs(a / dc.Lambda - 1) < tol for a, _ in tail)
    man.verdicts["ratio_B_converges"] = all(abs(b / dc.Lambda0 - 1) < tol for _, b in tail)
    man.verdicts["four_pairs_overlap"] = all(c >= int(cfg["min_overlaps"]) for c in counts.values())


def _run_loop(cfg: dict, built: dict, out: Path, man: RunManifest) -> None:
    m = built["first"]
    rngs = member_rngs(cfg["seed"], int(cfg["count"]))
    lo, hi = cfg["band"]
    nu = m.saddle.nu
    rows, inc, big, clean = [], True, True, True
    K = m.return_time
    for i, r in enumerate(rngs):
        z_fast = float(r.uniform(lo, hi))
        # strictly between z_fast and its image
        z_slow = z_fast + float(r.uniform(0.05, 0.95)) * ((nu - 1) * z_fast - math.log(m.saddle.c))
        t_fast = generate_timeline(m, zeta0=z_fast, n_turns=int(cfg["n_turns"]))
        t_slow = generate_timeline(m, zeta0=z_slow, n_turns=int(cfg["n_turns"]))
        gaps, last = loop_divergence(t_slow, t_fast, K)
        inc &= all(b > a for a, b in zip(gaps, gaps[1:]))
        big &= gaps[-1] > 100 * K
        start = 0 if last is None else last + 1
        tb_s = [s.to_float() for s in t_slow.stamps_b]
        tb_f = [s.to_float() for s in t_fast.stamps_b]
        clean &= all(abs(a - b) > K for a in tb_s[start:] for b in tb_f[start:])
        rows.append((i, z_fast, z_slow, gaps[-1], "" if last is None else last))
    man.outputs["gaps"] = write_csv(out / "gaps.csv", ["pair", "zeta_fast", "zeta_slow", "final_gap", "last_index"], rows).name
    man.verdicts["gaps_increasing"] = inc
    man.verdicts["final_gap_large"] = big
    man.verdicts["no_late_simultaneous_B"] = clean


def _run_mbe_biangle(cfg: dict, built: dict, out: Path, man: RunManifest) -> None:
    m, b = built["first"], built["second"]
    t1 = generate_timeline(m, float(cfg["seeds"]["z0"]), int(cfg["n_turns"]), label="mbe")
    t2 = generate_timeline(b, float(cfg["seeds"]["z1"]), int(cfg["biangle_turns"]), label="biangle")
    scale = LnLn()
    f1 = [r for r in tau_floats(t1, scale) if math.isfinite(r[1])]
    end = min(f1[-1][1], tau_floats(t2, scale)[-1][1])
    f2 = [r for r in tau_floats(t2, scale) if r[1] <= end]
    colors = ColorIntervalSet.from_tau_events(f1, f2, ("mbe", "biangle"))
    counts = {
        f"{a}-{c}": len(overlap_report(colors, (a, c), float(cfg["min_len"])))
        for a in ("white", "black")
        for c in ("blue", "red")
    }
    man.outputs["colors"] = write_csv(out / "colors.csv", ["color", "tau_start", "tau_end"], interval_rows(colors)).name
    # Horizons: the ends of the saddle-node orbit's B legs plus a sweep of the biangle's turns.
    stride = max(1, t2.n_turns // 40)
    cand = [t1.stamps_a[k] for k in range(2, t1.n_turns + 1)] + [t2.stamps_a[k] for k in range(1, t2.n_turns + 1, stride)]
    horizons = sorted(h for h in cand if not t1.end < h and not t2.end < h)
    fr = {"AA": 0.0, "AB": 0.0, "BA": 0.0, "BB": 0.0}
    for h in horizons:
        for pair, v in simultaneous_fractions(t1, t2, h).items():
            fr["".join(pair)] = max(fr["".join(pair)], v)
    man.outputs["fractions"] = write_csv(out / "fractions.csv", ["pair", "limsup_fraction"], sorted(fr.items())).name
    man.summary.update({"overlaps": counts, "limsup_fractions": fr})
    man.verdicts["four_pairs_overlap"] = all(c > 0 for c in counts.values())
    man.verdicts["four_pairs_persist"] = all(v > float(cfg["threshold"]) for v in fr.values())


def _cyl_theta0(cfg: dict, s: DescentSchedule) -> float:
    return s.theta_l if cfg.get("theta0") is None else float(cfg["theta0"])


def _run_cylinder(cfg: dict, built: dict, out: Path, man: RunManifest) -> None:
    f, s, v = built["geometry"]
    eps, xi_max = float(cfg["epsilon"]), float(cfg["xi_max"])
    orbit = integrate_orbit(_cyl_theta0(cfg, s), 0.0, xi_max, f, s, v, float(cfg["tol"]))
    occ = occupancy(orbit, s, v, eps, f)
    step = max(1, len(orbit.xi) // 5000)
    man.outputs["orbit"] = write_csv(out / "orbit.csv", ["xi", "theta", "t"], zip(orbit.xi[::step], orbit.theta[::step], orbit.t[::step])).name
    man.outputs["occupancy"] = write_csv(out / "occupancy.csv", ["xi", "chi_l", "chi_r"], zip(occ.xi_grid, occ.chi_l, occ.chi_r)).name
    tol = float(cfg["tolerance"])
    cl, cr = float(occ.chi_l[-1]), float(occ.chi_r[-1])
    man.summary.update({"chi_l": cl, "chi_r": cr, "xi": float(occ.xi_grid[-1])})
    man.verdicts["chi_l_half"] = abs(cl - 0.5) < tol
    man.verdicts["chi_r_half"] = abs(cr - 0.5) < tol
    man.verdicts["chi_sum"] = cl + cr > 0.9


def _cyl_pair(args):
    f, s, v, eps, xi_max, tol, th1, th2, d = args
    o1 = integrate_orbit(th1, 0.0, xi_max, f, s, v, tol)
    o2 = integrate_orbit(th2, d, _xi_covering(xi_max, d, v), f, s, v, tol)
    return o1, o2, pair_occupancy(o1, o2, s, v, eps, f=f)


def _xi_covering(xi_max: float, xi0: float, v: VerticalProfile) -> float:
    """Depth an orbit started at ``xi0`` must reach to outlast one started at the top and run to ``xi_max``."""
    need = v.t_of_xi(xi_max) + v.t_of_xi(xi0)
    return max(xi_max, math.log1p(need) ** 2) + 1e-6


def _run_cylinder_pairs(cfg: dict, built: dict, out: Path, man: RunManifest) -> None:
    f, s, v = built["geometry"]
    eps, xi_max, tol = float(cfg["epsilon"]), float(cfg["xi_max"]), float(cfg["tol"])
    lo, hi = cfg["offset_band"]
    rngs = member_rngs(cfg["seed"], int(cfg["count"]))
    jobs = []
    for r in rngs:
        th1, th2 = (s.theta_l + float(x) for x in r.uniform(-1.2, 1.2, 2))
        jobs.append((f, s, v, eps, xi_max, tol, th1, th2, float(r.uniform(lo, hi))))
    results = _map(_cyl_pair, jobs, int(cfg["workers"]))
    rows, ok_ll, ok_rr, ok_off, ok_phys = [], True, True, True, True
    ctol = float(cfg["tolerance"])
    atoms = RegionSystem.strips().product(RegionSystem.strips())
    for i, (o1, o2, po) in enumerate(results):
        rows.append((i, po.xi_first[-1], po.s_ll[-1], po.s_rr[-1], po.s_lr[-1], po.s_rl[-1]))
        ok_ll &= abs(po.s_ll[-1] - 0.5) < ctol
        ok_rr &= abs(po.s_rr[-1] - 0.5) < ctol
        ok_off &= po.s_lr[-1] + po.s_rl[-1] < ctol
        src = ProductSource(OrbitSource.from_orbit(o1, s, v, eps), OrbitSource.from_orbit(o2, s, v, eps))
        pw = physical_weights(src, atoms, [LogTime.from_float(h) for h in po.horizons[-50:]])
        fin = pw.final()
        ok_phys &= abs(fin[("L", "L")] - 0.5) < ctol and abs(fin[("R", "R")] - 0.5) < ctol
    man.outputs["pairs"] = write_csv(out / "pairs.csv", ["pair", "xi", "s_ll", "s_rr", "s_lr", "s_rl"], rows).name
    if results:
        po = results[0][2]
        man.outputs["pair_occupancy"] = write_csv(
            out / "pair_occupancy.csv", ["xi", "s_ll", "s_rr", "s_lr", "s_rl"], zip(po.xi_first, po.s_ll, po.s_rr, po.s_lr, po.s_rl)
        ).name
    man.verdicts["s_ll_half"] = ok_ll
    man.verdicts["s_rr_half"] = ok_rr
    man.verdicts["off_diagonal_small"] = ok_off
    man.verdicts["physical_weights_diagonal"] = ok_phys


_RUNNERS = {
    "biangle-square": _run_biangle,
    "mbe-square": _run_mbe_pairs,
    "mbe-times-mbe": _run_mbe_pairs,
    "loop-square": _run_loop,
    "mbe-times-biangle": _run_mbe_biangle,
    "cylinder": _run_cylinder,
    "cylinder-square": _run_cylinder_pairs,
}


def run_scenario(cfg: dict, out_dir: Optional[Path] = None) -> RunManifest:
    """Validate, execute and record one scenario.

    Invalid configurations raise ``ConfigError`` before anything runs.
    Errors during the run are recorded in the manifest together with the
    outputs written so far.
    """
    built = validate_config(cfg)
    digest = config_hash(cfg)
    out = Path(out_dir) if out_dir is not None else output_root(cfg) / f"{cfg['kind']}-{digest[:12]}"
    out.mkdir(parents=True, exist_ok=True)
    man = RunManifest(cfg["kind"], digest, __version__, cfg, directory=str(out))
    start = time.perf_counter()
    try:
        _RUNNERS[cfg["kind"]](cfg, built, out, man)
    except Exception as exc:  # recorded, not swallowed: the manifest carries the failure
        man.status = "error"
        man.error = {"type": type(exc).__name__, "message": str(exc), "trace": traceback.format_exc(limit=5)}
    man.outputs = {k: str(v) for k, v in man.outputs.items()}
    man.verdicts = {k: bool(v) for k, v in man.verdicts.items()}
    man.wall_clock = round(time.perf_counter() - start, 3)
    write_json(out / "manifest.json", man.to_json())
    return man


def emit_report(manifest_path: Path, fmt: str = "json") -> Path:
    """Write the verdict table of a finished run as ``report.csv`` or ``report.json``."""
    manifest_path = Path(manifest_path)
    from .reporting import read_json

    data = read_json(manifest_path)
    out_dir = manifest_path.parent
    verdicts = data.get("verdicts", {})
    if fmt == "csv":
        return write_csv(out_dir / "report.csv", ["check", "passed"], sorted(verdicts.items()))
    if fmt == "json":
        report = {
            "kind": data["kind"],
            "config_hash": data["config_hash"],
            "status": data.get("status"),
            "verdicts": verdicts,
            "summary": data.get("summary", {}),
        }
        return write_json(out_dir / "report.json", report)
    raise ConfigError(f"unknown report format {fmt!r}")
