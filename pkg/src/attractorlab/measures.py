"""Time-average occupancy of finite region systems and attractor estimates built from it.

A source is anything that can cut ``[0, horizon]`` into labelled segments:
one polycycle timeline (labels ``A``/``B``), one cylinder orbit (labels
``L``/``R``/``O``) or the product of two sources (tuples of labels on the
common refinement).  Weights are accumulated as exact rationals of the
normalised endpoints, so the marginals of a product histogram reproduce the
factor histograms bit for bit.
"""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Iterable, Optional, Sequence, Union

from .errors import DomainError, HierarchyViolation, HorizonError
from .numbers import LogTime
from .timelines import EventTimeline, as_log_time, leg_segments, merge_segments, segment_weights

__all__ = [
    "RegionSystem",
    "OccupancyHistogram",
    "AttractorEstimate",
    "TimelineSource",
    "OrbitSource",
    "ProductSource",
    "accumulate",
    "estimate_attractors",
    "physical_weights",
    "PhysicalWeights",
    "oscillation_detect",
    "OscillationRefusal",
    "DEFAULT_THRESHOLD",
]

DEFAULT_THRESHOLD = 0.05


# --- region systems -------------------------------------------------------------------


@dataclass(frozen=True)
class RegionSystem:
    """Named disjoint regions and the map from source labels onto them.

    ``label_map`` sends each raw segment label to a region name; labels
    missing from it map to themselves.  A product system's regions are the
    pairs of factor regions.
    """

    name: str
    regions: tuple
    label_map: tuple = ()
    factors: tuple = ()

    def __post_init__(self):
        if len(set(self.regions)) != len(self.regions):
            raise DomainError("region names must be distinct")

    @classmethod
    def legs(cls, name: str = "legs") -> RegionSystem:
        return cls(name, ("A", "B"))

    @classmethod
    def strips(cls, name: str = "strips") -> RegionSystem:
        return cls(name, ("L", "R", "O"))

    @classmethod
    def single(cls, labels: Iterable[str], region: str = "all") -> RegionSystem:
        """One region covering every listed label."""
        return cls("single", (region,), tuple((lab, region) for lab in labels))

    def product(self, other: RegionSystem) -> RegionSystem:
        cells = tuple((a, b) for a in self.regions for b in other.regions)
        return RegionSystem(f"{self.name}x{other.name}", cells, (), (self, other))

    @property
    def is_product(self) -> bool:
        return bool(self.factors)

    def region_of(self, label: Any) -> Any:
        if self.is_product:
            return tuple(f.region_of(lab) for f, lab in zip(self.factors, label))
        lookup = dict(self.label_map)
        region = lookup.get(label, label)
        if region not in self.regions:
            raise DomainError(f"label {label!r} does not belong to any region of {self.name}")
        return region


# --- sources --------------------------------------------------------------------------


Segments = list  # of (LogTime, LogTime, label)


@dataclass(frozen=True)
class TimelineSource:
    """Leg-granular occupancy of a polycycle orbit."""

    timeline: EventTimeline

    @property
    def end(self) -> LogTime:
        return self.timeline.end

    def segments(self, horizon: LogTime) -> Segments:
        return leg_segments(self.timeline, horizon)

    def turn_horizons(self, ks: Iterable[int]) -> list[LogTime]:
        """``T_kA`` for each requested turn."""
        return [self.timeline.stamps_a[k] for k in ks]


@dataclass(frozen=True)
class OrbitSource:
    """Strip occupancy of a cylinder orbit, from precomputed elapsed-time segments."""

    raw_segments: tuple

    @classmethod
    def from_orbit(cls, orbit, schedule, profile, epsilon: float) -> OrbitSource:
        from .cylinder import orbit_segments

        return cls(tuple(orbit_segments(orbit, schedule, profile, epsilon)))

    @property
    def end(self) -> LogTime:
        return LogTime.from_float(self.raw_segments[-1][1])

    def segments(self, horizon: LogTime) -> Segments:
        if horizon.log_minus(self.end) > 0:
            raise HorizonError("horizon lies beyond the integrated orbit")
        out = []
        for a, b, lab in self.raw_segments:
            sa, sb = LogTime.from_float(a), LogTime.from_float(b)
            if sa.log_minus(horizon) >= 0:
                break
            if sb.log_minus(horizon) > 0:
                out.append((sa, horizon, lab))
                break
            out.append((sa, sb, lab))
        return out


@dataclass(frozen=True)
class ProductSource:
    """Two sources observed on their common time axis."""

    first: Any
    second: Any

    @property
    def end(self) -> LogTime:
        a, b = self.first.end, self.second.end
        return a if a.log_minus(b) <= 0 else b

    def segments(self, horizon: LogTime) -> Segments:
        return merge_segments(self.first.segments(horizon), self.second.segments(horizon))


Source = Union[TimelineSource, OrbitSource, ProductSource]


# --- histograms -----------------------------------------------------------------------


@dataclass(frozen=True)
class OccupancyHistogram:
    """Fraction of ``[0, horizon]`` spent in each region, stored as exact rationals."""

    horizon: LogTime
    weights: dict
    system: RegionSystem
    n_segments: int = 0
    tail_regions: frozenset = field(default_factory=frozenset)

    def __getitem__(self, region) -> float:
        return float(self.weights.get(region, 0))

    def total(self) -> Fraction:
        return sum(self.weights.values(), Fraction(0))

    def as_floats(self) -> dict:
        return {r: float(self.weights.get(r, 0)) for r in self.system.regions}

    def marginal(self, index: int) -> dict:
        """Exact weights of factor ``index`` obtained by summing product cells."""
        if not self.system.is_product:
            raise DomainError("marginals are defined for product systems")
        out: dict = {}
        for cell, w in self.weights.items():
            out[cell[index]] = out.get(cell[index], Fraction(0)) + w
        return out


def accumulate(source: Source, regions: RegionSystem, horizon: Any, tail_fraction: float = 0.25) -> OccupancyHistogram:
    """Time-average occupancy of each region up to ``horizon``.

    Also records which regions the last ``tail_fraction`` of the segments
    visit, the raw material of the Milnor estimate.
    """
    h = as_log_time(horizon)
    if h.log_minus(source.end) > 0:
        raise HorizonError("horizon lies beyond the source's recorded range")
    raw = source.segments(h)
    segs = [(a, b, regions.region_of(lab)) for a, b, lab in raw]
    weights = segment_weights(segs, h)
    n_tail = max(1, math.ceil(len(segs) * tail_fraction)) if segs else 0
    tail = frozenset(lab for _, _, lab in segs[len(segs) - n_tail :])
    return OccupancyHistogram(h, weights, regions, len(segs), tail)


# --- attractor estimates --------------------------------------------------------------


@dataclass(frozen=True)
class AttractorEstimate:
    milnor_cells: frozenset
    statistical_cells: frozenset
    minimal_cells: frozenset
    threshold: float
    rule: str
    common_horizon: Optional[LogTime] = None
    statistics: dict = field(default_factory=dict, repr=False)
    means: dict = field(default_factory=dict, repr=False)

    def check_hierarchy(self) -> None:
        if not self.minimal_cells <= self.statistical_cells:
            raise HierarchyViolation(
                f"minimal cells {sorted(map(str, self.minimal_cells - self.statistical_cells))} are not statistical"
            )
        if not self.statistical_cells <= self.milnor_cells:
            raise HierarchyViolation(
                f"statistical cells {sorted(map(str, self.statistical_cells - self.milnor_cells))} are not Milnor"
            )


Schedule = Union[Sequence[Any], Callable[[Any], Sequence[Any]]]


def _source_schedule(schedule: Schedule, source: Source) -> list[LogTime]:
    hs = schedule(source) if callable(schedule) else schedule
    hs = [as_log_time(h) for h in hs]
    if len(hs) < 4:
        raise DomainError("horizon schedule needs at least four horizons")
    for a, b in zip(hs, hs[1:]):
        if not a.log_minus(b) < 0:
            raise DomainError("horizon schedule must be increasing")
    return hs


def _median_time(times: list[LogTime]) -> LogTime:
    ordered = sorted(times)
    return ordered[(len(ordered) - 1) // 2]


def estimate_attractors(
    ensemble: Sequence[Source],
    regions: RegionSystem,
    schedule: Schedule,
    threshold: float = DEFAULT_THRESHOLD,
    *,
    rule: str = "limsup",
    tail_fraction: float = 0.25,
    min_ensemble: int = 30,
    common_horizon: Any = None,
) -> AttractorEstimate:
    """Partition-level Milnor, statistical and minimal attractor estimates.

    * statistical: a region qualifies when, for at least half of the
      sources, its time fraction exceeds ``threshold``.  With
      ``rule="limsup"`` the fraction is the largest one over the second half
      of the source's schedule; with ``rule="final"`` it is the fraction at
      the last horizon.
    * minimal: the ensemble mean of the time fractions at one common
      horizon exceeds ``threshold``.  The common horizon defaults to the
      median of the sources' final horizons.
    * Milnor: some source visits the region during the last
      ``tail_fraction`` of its segments up to its final horizon.

    The nesting minimal within statistical within Milnor is checked and a
    violation raises ``HierarchyViolation``.
    """
    if len(ensemble) < min_ensemble:
        raise DomainError(f"ensemble needs at least {min_ensemble} sources")
    if not (0.0 < threshold < 0.5):
        raise DomainError("threshold must lie in (0, 0.5)")
    if rule not in ("limsup", "final"):
        raise DomainError("rule must be 'limsup' or 'final'")

    per_source_stat = []
    finals = []
    milnor: set = set()
    for src in ensemble:
        hs = _source_schedule(schedule, src)
        finals.append(hs[-1])
        window = hs[len(hs) // 2 :] if rule == "limsup" else hs[-1:]
        best: dict = {r: 0.0 for r in regions.regions}
        for h in window:
            hist = accumulate(src, regions, h, tail_fraction)
            for r in regions.regions:
                best[r] = max(best[r], hist[r])
        last = accumulate(src, regions, hs[-1], tail_fraction)
        milnor |= set(last.tail_regions)
        per_source_stat.append(best)

    half = len(ensemble) / 2.0
    stat_cells = frozenset(
        r for r in regions.regions if sum(1 for b in per_source_stat if b[r] > threshold) >= half
    )

    h_common = as_log_time(common_horizon) if common_horizon is not None else _median_time(finals)
    means = {r: 0.0 for r in regions.regions}
    for src in ensemble:
        hist = accumulate(src, regions, h_common, tail_fraction)
        for r in regions.regions:
            means[r] += hist[r] / len(ensemble)
    min_cells = frozenset(r for r in regions.regions if means[r] > threshold)

    stats = {r: [b[r] for b in per_source_stat] for r in regions.regions}
    est = AttractorEstimate(frozenset(milnor), stat_cells, min_cells, threshold, rule, h_common, stats, means)
    est.check_hierarchy()
    return est


# --- physical measures ----------------------------------------------------------------


@dataclass(frozen=True)
class PhysicalWeights:
    horizons: tuple
    weights: dict  # atom -> tuple of floats, one per horizon
    oscillation: float

    def final(self) -> dict:
        return {a: w[-1] for a, w in self.weights.items()}


def physical_weights(source: Source, atoms: RegionSystem, schedule: Sequence[Any]) -> PhysicalWeights:
    """Birkhoff weights of each atom along a horizon schedule.

    ``oscillation`` is the largest spread of any atom's weight over the
    second half of the schedule; small values indicate convergence.
    """
    hs = [as_log_time(h) for h in schedule]
    if not hs:
        raise DomainError("empty horizon schedule")
    seq = {a: [] for a in atoms.regions}
    for h in hs:
        hist = accumulate(source, atoms, h)
        for a in atoms.regions:
            seq[a].append(hist[a])
    tail = len(hs) // 2
    osc = max((max(v[tail:]) - min(v[tail:]) for v in seq.values()), default=0.0)
    return PhysicalWeights(tuple(hs), {a: tuple(v) for a, v in seq.items()}, osc)


# --- oscillating ensembles ------------------------------------------------------------


@dataclass(frozen=True)
class OscillationRefusal:
    reason: str

    def __bool__(self) -> bool:
        return False


def _run_starts(times: Sequence[float], flags: Sequence[bool]) -> list[float]:
    out, prev = [], False
    for t, fl in zip(times, flags):
        if fl and not prev:
            out.append(t)
        prev = fl
    return out


def oscillation_detect(
    times: Sequence[float],
    occupancy_left: Sequence[float],
    occupancy_right: Sequence[float],
    delta: float,
    *,
    ensemble_size: Optional[int] = None,
    min_ensemble: int = 100,
) -> Union[tuple[list[float], list[float]], OscillationRefusal]:
    """Moments where the ensemble crowds into one region, alternating between the two.

    ``occupancy_left[i]`` is the share of the ensemble inside the left
    region at ``times[i]``.  A moment is recorded at the start of every run
    of times with share above ``1 - delta``.  Returns interleaved increasing
    sequences ``(L, R)``, or a refusal when either region is never crowded.
    """
    if not (0.0 < delta < 1.0):
        raise DomainError("delta must lie in (0, 1)")
    if ensemble_size is not None and ensemble_size < min_ensemble:
        raise DomainError(f"ensemble needs at least {min_ensemble} members")
    level = 1.0 - delta
    ls = _run_starts(times, [x > level for x in occupancy_left])
    rs = _run_starts(times, [x > level for x in occupancy_right])
    if not ls or not rs:
        return OscillationRefusal("occupancy never exceeded 1 - delta in one of the regions")
    # Keep one moment per alternation so the two sequences interleave.
    merged = sorted([(t, "L") for t in ls] + [(t, "R") for t in rs])
    keep: list = []
    for t, lab in merged:
        if not keep or keep[-1][1] != lab:
            keep.append((t, lab))
    out_l = [t for t, lab in keep if lab == "L"]
    out_r = [t for t, lab in keep if lab == "R"]
    if not out_l or not out_r:
        return OscillationRefusal("no alternation between the regions")
    return out_l, out_r
