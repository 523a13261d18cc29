"""Per-turn crossing times of a single orbit and the time-scale transforms used on them.

A timeline records, for turns ``k = 1..n``, the moment ``T_kA`` the orbit
returns to the entry transversal of the first vertex and the moment ``T_kB``
it next crosses the transversal between the two vertices.  The orbit is in
region ``A`` on ``(T_kA, T_kB)`` and in region ``B`` on ``(T_kB, T_{k+1,A})``.
Row ``k = 0`` (time zero and the end of the first leg) is kept internally so
that occupancy can be measured from time zero.

Times are kept as ``LogTime`` stamps.  Biangle times are exposed as
``LogValue``, saddle-node (MBE) times as ``TowerValue`` and loop times as
plain floats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence, Union

import numpy as np

from .errors import (
    ChartExitError,
    ContractionViolation,
    DomainError,
    HorizonError,
    InsufficientEvents,
    InterleavingViolation,
)
from .maps import (
    Biangle,
    Loop,
    ModifiedBowen,
    PolycycleModel,
    derived_constants,
    loop_zeta_step,
    mbe_tau_step,
    saddle_local,
)
from .numbers import LogTime, LogValue, TowerValue, tower_difference

__all__ = [
    "LogLambda",
    "LnLn",
    "Zeta",
    "TurnEvent",
    "EventTimeline",
    "generate_timeline",
    "rescale",
    "tau_floats",
    "recurrence_residuals",
    "Residual",
    "geometric_ratios",
    "gamma_hat_log",
    "mbe_tau_gaps",
    "loop_divergence",
    "leg_segments",
    "merge_segments",
    "segment_weights",
    "simultaneous_fraction",
    "simultaneous_fractions",
    "as_log_time",
    "MAX_TURNS",
]

MAX_TURNS = 10**6
# Exact tier: leg times are formed as plain doubles while ln(1/x) stays below this.
_EXACT_LIMIT = 700.0
# Biangle switches to log-log state once a turn could push coordinates below ~1e-300.
_BIANGLE_LOG_LIMIT = 690.0


@dataclass(frozen=True)
class LogLambda:
    """``tau = log_base(t)``."""

    base: float

    def __post_init__(self):
        if not self.base > 1:
            raise DomainError("logarithm base must exceed 1")


@dataclass(frozen=True)
class LnLn:
    """``tau = ln ln t``."""


@dataclass(frozen=True)
class Zeta:
    """Loop bookkeeping: ``tau`` is the coordinate ``ln(1/x)`` at the crossing."""


Scale = Union[LogLambda, LnLn, Zeta]


@dataclass(frozen=True)
class TurnEvent:
    k: int
    time_a: Any
    time_b: Any
    tier: str


@dataclass(frozen=True)
class EventTimeline:
    """Crossing times of one orbit.

    ``stamps_a[k]`` and ``stamps_b[k]`` hold ``T_kA`` and ``T_kB`` for
    ``k = 0..n`` with ``T_0A = 0``.  ``tiers[k]`` names the arithmetic used for
    row ``k``: ``exact`` (plain doubles), ``log`` (closed-form model in log
    arithmetic) or ``tower`` (asymptotic double-log recurrence).
    """

    model: PolycycleModel
    z0: float
    stamps_a: tuple
    stamps_b: tuple
    tiers: tuple
    scale: Scale
    zetas: Optional[tuple] = None
    label: str = ""
    lnln_steps: Optional[tuple] = field(default=None, repr=False)
    events: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        n = len(self.stamps_a) - 1
        evs = []
        for k in range(1, n + 1):
            evs.append(TurnEvent(k, self._expose(self.stamps_a[k]), self._expose(self.stamps_b[k]), self.tiers[k]))
        object.__setattr__(self, "events", tuple(evs))

    def _expose(self, stamp: LogTime):
        if isinstance(self.model, Biangle):
            return stamp.to_log_value()
        if isinstance(self.model, ModifiedBowen):
            return stamp.to_tower()
        return stamp.to_float()

    @property
    def n_turns(self) -> int:
        return len(self.stamps_a) - 1

    @property
    def end(self) -> LogTime:
        """Last time up to which region membership is known."""
        return self.stamps_b[-1]

    def tau_sequence(self) -> list:
        """``tau_j = ln ln T_{j+1,A}`` for ``j = 0..n-1`` (saddle-node models)."""
        return [s.loglog() for s in self.stamps_a[1:]]

    def with_label(self, label: str) -> EventTimeline:
        return EventTimeline(self.model, self.z0, self.stamps_a, self.stamps_b, self.tiers, self.scale, self.zetas, label, self.lnln_steps)


def default_scale(m: PolycycleModel) -> Scale:
    if isinstance(m, Biangle):
        return LogLambda(derived_constants(m).Lambda)
    if isinstance(m, ModifiedBowen):
        return LnLn()
    return Zeta()


def as_log_time(t: Any) -> LogTime:
    """Coerce a time given as float, ``LogValue``, ``TowerValue`` or ``LogTime``."""
    if isinstance(t, LogTime):
        return t
    if isinstance(t, LogValue):
        return LogTime.from_log(t.log)
    if isinstance(t, TowerValue):
        if t.is_plain():
            return LogTime.from_float(t.to_float())
        return LogTime(t.ln(), 0.0)
    return LogTime.from_float(float(t))


def _check_turns(n_turns: int) -> None:
    if n_turns < 1:
        raise HorizonError("n_turns must be at least 1")
    if n_turns > MAX_TURNS:
        raise HorizonError(f"n_turns={n_turns} exceeds the supported horizon of {MAX_TURNS}")


def generate_timeline(
    m: PolycycleModel,
    z0: Optional[float] = None,
    n_turns: int = 10,
    *,
    zeta0: Optional[float] = None,
    scale: Optional[Scale] = None,
    label: str = "",
) -> EventTimeline:
    """Crossing times of the orbit of ``z0`` over ``n_turns`` turns.

    Loop orbits may instead be seeded by ``zeta0 = ln(1/z0)``, which avoids
    underflow for seeds extremely close to the loop.
    """
    _check_turns(n_turns)
    if zeta0 is not None:
        if not isinstance(m, Loop):
            raise DomainError("zeta0 seeding is only defined for loops")
        z0 = math.exp(-zeta0)
    if z0 is None:
        raise DomainError("a seed z0 is required")
    if not (0.0 < z0 < 1.0) and zeta0 is None:
        raise DomainError(f"seed must lie in (0, 1), got {z0!r}")
    scale = scale or default_scale(m)
    if isinstance(m, Biangle):
        a, b, tiers = _biangle_times(m, z0, n_turns)
        return EventTimeline(m, z0, a, b, tiers, scale, label=label)
    if isinstance(m, ModifiedBowen):
        a, b, tiers, steps = _mbe_times(m, z0, n_turns)
        return EventTimeline(m, z0, a, b, tiers, scale, label=label, lnln_steps=steps)
    if isinstance(m, Loop):
        z = zeta0 if zeta0 is not None else -math.log(z0)
        a, b, tiers, zetas = _loop_times(m, z, n_turns)
        return EventTimeline(m, z0, a, b, tiers, scale, zetas=zetas, label=label)
    raise TypeError(f"unknown model {m!r}")


_TIER_ORDER = {"exact": 0, "log": 1, "tower": 2}


def _row_tiers(turn_tiers: list) -> tuple:
    """Row ``k`` pairs ``T_kA`` (turn ``k``) with ``T_kB`` (turn ``k+1``); report the later tier."""
    rows = [turn_tiers[0]]
    for k in range(1, len(turn_tiers)):
        rows.append(max(turn_tiers[k - 1], turn_tiers[k], key=_TIER_ORDER.get))
    return tuple(rows)


def _loglog_leg(y: float, p) -> tuple[float, float]:
    """Saddle passage in the state ``y = ln ln(1/x)``: returns (log leg time, next y)."""
    log_time = y - math.log(p.lambda_)
    shift = -math.log(p.c) * math.exp(-y) / p.nu
    if shift <= -1.0:
        raise ChartExitError("coordinate left the chart in log-log arithmetic")
    return log_time, y + math.log(p.nu) + math.log1p(shift)


def _biangle_times(m: Biangle, z0: float, n: int):
    sa, sb = m.saddle_a, m.saddle_b
    total = LogValue.zero()
    stamps_a, stamps_b, tiers = [LogTime.zero()], [], []
    x: Optional[float] = z0
    y = 0.0
    if -math.log(z0) * sa.nu * sb.nu > _BIANGLE_LOG_LIMIT:
        y, x = math.log(-math.log(z0)), None
    for j in range(1, n + 2):
        if x is not None:
            mid, t_a = saddle_local(x, sa)
            if mid >= 1.0:
                raise ChartExitError(f"intermediate coordinate {mid!r} left the chart")
            after_a = total + LogValue.from_real(t_a)
            stamps_b.append(LogTime.from_log(after_a.log))
            tiers.append("exact")
            if j == n + 1:
                break
            nxt, t_b = saddle_local(mid, sb)
            if nxt >= 1.0:
                raise ChartExitError(f"image {nxt!r} left the chart")
            if not nxt < x:
                raise ContractionViolation(f"step from {x!r} did not contract")
            total = after_a + LogValue.from_real(t_b)
            stamps_a.append(LogTime.from_log(total.log))
            x = nxt
            # Leave plain doubles before the next turn could underflow.
            if -math.log(nxt) * sa.nu * sb.nu > _BIANGLE_LOG_LIMIT:
                y = math.log(-math.log(nxt))
                x = None
        else:
            log_ta, y_mid = _loglog_leg(y, sa)
            after_a = total + LogValue(log_ta)
            stamps_b.append(LogTime.from_log(after_a.log))
            tiers.append("log")
            if j == n + 1:
                break
            log_tb, y = _loglog_leg(y_mid, sb)
            total = after_a + LogValue(log_tb)
            if not math.isfinite(total.log):
                raise HorizonError("biangle time left the range of log arithmetic")
            stamps_a.append(LogTime.from_log(total.log))
    return tuple(stamps_a), tuple(stamps_b), _row_tiers(tiers)


def _loop_times(m: Loop, zeta: float, n: int):
    p = m.saddle
    t_a = 0.0
    stamps_a, stamps_b, tiers, zetas = [LogTime.zero()], [], [], [zeta]
    for j in range(1, n + 2):
        t_b = t_a + zeta / p.lambda_
        stamps_b.append(LogTime.from_float(t_b))
        tiers.append("exact")
        if j == n + 1:
            break
        t_a = t_b + m.return_time
        stamps_a.append(LogTime.from_float(t_a))
        zeta = loop_zeta_step(zeta, p)
        if not math.isfinite(zeta) or not math.isfinite(t_a):
            raise HorizonError("loop coordinate overflowed; reduce n_turns")
        zetas.append(zeta)
    return tuple(stamps_a), tuple(stamps_b), tuple(tiers), tuple(zetas)


def _mbe_times(m: ModifiedBowen, z0: float, n: int):
    a, b = m.saddle_node.a, m.saddle_node.b
    sp = m.saddle
    consts = derived_constants(m)
    nu, c_time = consts.nu, consts.c_time
    ln_c = math.log(sp.c)
    b_share = math.log(sp.lambda_ / (b + sp.lambda_))

    stamps_a, stamps_b, tiers = [LogTime.zero()], [], []
    total = LogValue.zero()
    ell: Optional[float] = -math.log(z0)
    tau: Optional[TowerValue] = None
    big: Optional[TowerValue] = None
    big_log = 0.0
    # per closed-form A-turn: (ln depth, offset, ln T, shift) with ln T = depth + offset
    parts: list = []

    for j in range(1, n + 2):
        if ell is not None and ell <= _EXACT_LIMIT:
            e = math.exp(ell)
            t_sn = e / b
            depth = e - a * ell  # ln(1/y) after the saddle-node
            if depth <= 0.0:
                raise ChartExitError("saddle-node image left the chart; start closer to the polycycle")
            t_s = depth / sp.lambda_
            after_a = total + LogValue.from_real(t_sn)
            stamps_b.append(LogTime.from_log(after_a.log))
            tiers.append("exact")
            if j == n + 1:
                break
            total = after_a + LogValue.from_real(t_s)
            stamps_a.append(LogTime.from_log(total.log))
            parts.append((math.log(total.log), 0.0, total.log, None))
            nxt = nu * depth - ln_c
            if not nxt > ell:
                raise ContractionViolation(f"turn {j} did not contract")
            ell = nxt if math.isfinite(nxt) else None
            if ell is None:
                tau = stamps_a[-1].loglog()
        elif ell is not None:
            anchor = TowerValue.from_float(ell)
            rel = total.log - ell  # log of T_prev / e^ell
            off_b = np.logaddexp(rel, -math.log(b))
            stamps_b.append(LogTime(anchor, float(off_b)))
            tiers.append("log")
            if j == n + 1:
                break
            core = c_time - a * ell * math.exp(-ell) / sp.lambda_
            off_a = float(np.logaddexp(rel, math.log(core)))
            stamps_a.append(LogTime(anchor, off_a))
            # ln(next depth) - depth, free of cancellation
            shift = math.log(nu) + math.log1p(-(a * ell + ln_c / nu) * math.exp(-ell))
            parts.append((math.log(ell), off_a, ell + off_a, shift))
            total = LogValue(ell + off_a)
            nxt = nu * math.exp(ell) - nu * a * ell - ln_c if ell < 709.0 else math.inf
            if math.isfinite(nxt):
                ell = nxt
            else:
                # ln of the next depth is still an ordinary float
                shrink = math.log1p(-(a * ell + ln_c / nu) * math.exp(-ell))
                big_log = ell + math.log(nu) + shrink
                big = TowerValue.from_log(big_log)
                ell = None
        elif big is not None:
            # T_prev is negligible against exp(big); offsets reduce to the leg constants
            stamps_b.append(LogTime(big, -math.log(b)))
            tiers.append("log")
            if j == n + 1:
                break
            stamps_a.append(LogTime(big, math.log(c_time)))
            parts.append((big_log, math.log(c_time), math.inf, None))
            tau = stamps_a[-1].loglog()
            big = None
        else:
            tau = mbe_tau_step(tau, m)
            anchor = tau.exp()
            stamps_b.append(LogTime(anchor, b_share))
            tiers.append("tower")
            if j == n + 1:
                break
            stamps_a.append(LogTime(anchor, 0.0))
    return tuple(stamps_a), tuple(stamps_b), _row_tiers(tiers), _mbe_lnln_steps(parts)


def _mbe_lnln_steps(parts: list) -> tuple:
    """``ln ln T_{k+1,A} - ln T_kA`` for consecutive closed-form A-turns.

    When ``T_kA`` sits in the log tier the depth cancels symbolically, so the
    step is exact to rounding even where both terms are far beyond 1e15.
    """
    steps = []
    for (_, off, log_t, shift), (ln_depth, nxt_off, _, _) in zip(parts, parts[1:]):
        tail = math.log1p(nxt_off * math.exp(-ln_depth))
        if shift is None:
            steps.append(ln_depth + tail - log_t)
        else:
            steps.append(shift + tail - off)
    return tuple(steps)


def rescale(t: EventTimeline, scale: Optional[Scale] = None) -> list[tuple[Any, Any]]:
    """``(tau_kA, tau_kB)`` for each recorded turn ``k = 1..n``.

    ``LogLambda`` and ``Zeta`` give floats; ``LnLn`` gives ``TowerValue``.
    """
    scale = scale or t.scale
    out = []
    if isinstance(scale, LogLambda):
        base = math.log(scale.base)
        for k in range(1, t.n_turns + 1):
            la, lb = t.stamps_a[k].log_float(), t.stamps_b[k].log_float()
            if not (la > -math.inf):
                raise DomainError("log of a non-positive time")
            out.append((la / base, lb / base))
    elif isinstance(scale, LnLn):
        for k in range(1, t.n_turns + 1):
            out.append((t.stamps_a[k].loglog(), t.stamps_b[k].loglog()))
    elif isinstance(scale, Zeta):
        if t.zetas is None:
            raise DomainError("the zeta scale is only defined for loop timelines")
        p = t.model.saddle
        for k in range(1, t.n_turns + 1):
            z = t.zetas[k]
            out.append((z, p.nu * z - math.log(p.c)))
    else:
        raise TypeError(f"unknown scale {scale!r}")
    return out


def tau_floats(t: EventTimeline, scale: Optional[Scale] = None) -> list[tuple[float, float]]:
    """``rescale`` with every value as a float (``inf`` beyond double range)."""
    rows = rescale(t, scale)
    conv = lambda v: v.to_float() if isinstance(v, TowerValue) else float(v)
    return [(conv(a), conv(b)) for a, b in rows]


@dataclass(frozen=True)
class Residual:
    n: int
    value: float
    asymptotic: bool


def _require_mbe(t: EventTimeline) -> ModifiedBowen:
    if not isinstance(t.model, ModifiedBowen):
        raise DomainError("this analysis needs a saddle-node (MBE) timeline")
    return t.model


def recurrence_residuals(t: EventTimeline) -> list[Residual]:
    """``r_n = tau_{n+1} - exp(tau_n) - C`` along the timeline.

    Residuals whose later term was produced by the asymptotic recurrence
    are zero by construction and carry ``asymptotic=True``.
    """
    m = _require_mbe(t)
    c_const = derived_constants(m).C
    taus = t.tau_sequence()
    closed = sum(_turn_is_closed_form(t, k) for k in range(1, t.n_turns + 1))
    if closed < 3:
        raise InsufficientEvents("need at least three closed-form events for residuals")
    out = []
    for j in range(len(taus) - 1):
        asym = not _turn_is_closed_form(t, j + 2)
        if asym:
            out.append(Residual(j, 0.0, True))
            continue
        if t.lnln_steps is not None and j < len(t.lnln_steps):
            out.append(Residual(j, t.lnln_steps[j] - c_const, False))
            continue
        nxt, cur = taus[j + 1].to_float(), taus[j].to_float()
        out.append(Residual(j, nxt - math.exp(cur) - c_const, False))
    return out


def _turn_is_closed_form(t: EventTimeline, k: int) -> bool:
    """Whether ``T_kA`` came from closed-form arithmetic rather than the recurrence."""
    return t.stamps_a[k].offset != 0.0 or t.stamps_a[k].anchor.is_plain()


def mbe_tau_gaps(t: EventTimeline) -> list[float]:
    """``tau(T_{k+1,A}) - tau(T_kB)`` in double-log time over the closed-form turns.

    Stops at the first turn whose time no longer fits a double: the gap
    there is below any representable number.
    """
    _require_mbe(t)
    gaps = []
    for k in range(1, t.n_turns):
        if not _turn_is_closed_form(t, k + 1) or not t.stamps_a[k + 1].anchor.is_plain():
            break
        gaps.append(_loglog_gap(t.stamps_a[k + 1], t.stamps_b[k]))
    return gaps


def _loglog_gap(hi: LogTime, lo: LogTime) -> float:
    """``ln ln hi - ln ln lo`` without cancelling the two double-log values against each other."""
    base = lo.log_float()
    if math.isfinite(base) and base > 0.0:
        d = hi.log_minus(lo)
        if math.isfinite(d):
            return math.log1p(d / base)
    return tower_difference(hi.loglog(), lo.loglog())


def geometric_ratios(t: EventTimeline) -> list[tuple[float, float]]:
    """``(T_{k+1,A} / T_kA, T_kB / T_kA)`` for ``k = 1..n-1``."""
    if not isinstance(t.model, Biangle):
        raise DomainError("geometric ratios are defined for biangle timelines")
    if t.n_turns < 2:
        raise InsufficientEvents("need at least two events")
    return [
        (t.stamps_a[k + 1].ratio(t.stamps_a[k]), t.stamps_b[k].ratio(t.stamps_a[k]))
        for k in range(1, t.n_turns)
    ]


def gamma_hat_log(t: EventTimeline, k: int) -> float:
    """``ln(T_kA / Lambda**k)``, the finite-k estimate of the biangle phase constant."""
    lam = derived_constants(t.model).Lambda
    return t.stamps_a[k].log_float() - k * math.log(lam)


def loop_divergence(first: EventTimeline, second: EventTimeline, K: Optional[float] = None):
    """Gaps between the two orbits' crossings of the second transversal.

    Returns ``(gaps, last_index)`` where ``gaps[k]`` is the slower orbit's
    ``k``-th crossing time minus the faster orbit's, and ``last_index`` is the
    last ``k`` at which the two closed ``K``-windows spent in region ``B``
    intersect (``None`` if they never do).
    """
    for t in (first, second):
        if not isinstance(t.model, Loop):
            raise DomainError("loop_divergence needs loop timelines")
    if first.model != second.model:
        raise DomainError("both timelines must come from the same loop")
    K = first.model.return_time if K is None else K
    z1, z2 = first.zetas[0], second.zetas[0]
    if z1 == z2:
        raise InterleavingViolation("seeds coincide")
    slow, fast = (first, second) if z1 > z2 else (second, first)
    zs, zf = slow.zetas[0], fast.zetas[0]
    if not zs < loop_zeta_step(zf, fast.model.saddle):
        raise InterleavingViolation("slower seed must lie between the faster seed and its image")
    n = min(slow.n_turns, fast.n_turns) + 1
    tb_slow = [s.to_float() for s in slow.stamps_b[:n]]
    tb_fast = [s.to_float() for s in fast.stamps_b[:n]]
    gaps = [tb_slow[k] - tb_fast[k] for k in range(n)]
    last = None
    # closed windows: touching counts, up to the rounding of times stored as logarithms
    reach = K * (1.0 + 1e-12)
    for k in range(n):
        for j in (k, k + 1):
            if j < n and abs(tb_slow[k] - tb_fast[j]) <= reach:
                last = k
    return gaps, last


# --- occupancy segments -------------------------------------------------------------


def leg_segments(t: EventTimeline, horizon: Optional[LogTime] = None) -> list[tuple[LogTime, LogTime, str]]:
    """Region segments ``(start, end, "A" | "B")`` from time zero up to ``horizon``."""
    end = t.end if horizon is None else horizon
    if horizon is not None and horizon.log_minus(t.end) > 0:
        raise HorizonError("horizon lies beyond the recorded timeline")
    segs = []
    for k in range(t.n_turns + 1):
        pieces = [(t.stamps_a[k], t.stamps_b[k], "A")]
        if k < t.n_turns:
            pieces.append((t.stamps_b[k], t.stamps_a[k + 1], "B"))
        for s, e, lab in pieces:
            if s.log_minus(end) >= 0:
                return segs
            if e.log_minus(end) > 0:
                segs.append((s, end, lab))
                return segs
            segs.append((s, e, lab))
    return segs


def merge_segments(*seg_lists) -> list[tuple[LogTime, LogTime, tuple]]:
    """Common refinement of several segmentations of the same time range.

    Each joint segment carries the tuple of labels of the factors.  Empty
    segments are dropped.
    """
    idx = [0] * len(seg_lists)
    out = []
    cur = seg_lists[0][0][0]
    while all(i < len(s) for i, s in zip(idx, seg_lists)):
        ends = [s[i][1] for i, s in zip(idx, seg_lists)]
        nxt = ends[0]
        for e in ends[1:]:
            if e.log_minus(nxt) < 0:
                nxt = e
        labels = tuple(s[i][2] for i, s in zip(idx, seg_lists))
        if nxt.log_minus(cur) > 0:
            out.append((cur, nxt, labels))
        cur = nxt
        for f, e in enumerate(ends):
            if e.log_minus(nxt) <= 0:
                idx[f] += 1
    return out


def segment_weights(segments, horizon: LogTime) -> dict:
    """Fraction of ``[0, horizon]`` carried by each label, summed exactly.

    Endpoints are mapped to ``u = t / horizon`` in double precision and the
    lengths are accumulated as exact rationals, so weights of a common
    refinement add up to the weights of any coarser segmentation.
    """
    from fractions import Fraction

    acc: dict = {}
    for s, e, lab in segments:
        us = math.exp(min(0.0, s.log_minus(horizon)))
        ue = math.exp(min(0.0, e.log_minus(horizon)))
        acc[lab] = acc.get(lab, Fraction(0)) + (Fraction(ue) - Fraction(us))
    return acc


_PAIRS = {("A", "A"), ("A", "B"), ("B", "A"), ("B", "B")}


def simultaneous_fraction(first: EventTimeline, second: EventTimeline, region_pair: tuple, horizon: Any) -> float:
    """Fraction of ``[0, horizon]`` with orbit 1 in ``region_pair[0]`` and orbit 2 in ``region_pair[1]``."""
    pair = tuple(region_pair)
    if pair not in _PAIRS:
        raise DomainError(f"region pair must be one of {sorted(_PAIRS)}")
    return simultaneous_fractions(first, second, horizon)[pair]


def simultaneous_fractions(first: EventTimeline, second: EventTimeline, horizon: Any) -> dict:
    """All four joint fractions at one horizon, from a single merge of the two segmentations."""
    h = as_log_time(horizon)
    if h.log_minus(first.end) > 0 or h.log_minus(second.end) > 0:
        raise HorizonError("horizon exceeds the recorded range of a timeline")
    joint = merge_segments(leg_segments(first, h), leg_segments(second, h))
    w = segment_weights(joint, h)
    return {p: float(w.get(p, 0)) for p in sorted(_PAIRS)}
