"""Colored tau-intervals of a pair of timelines and their overlaps.

For a pair of orbits the rescaled time axis is cut twice: the first orbit's
``A`` legs are white and its ``B`` legs black; the second orbit's ``A`` legs
are blue and its ``B`` legs red.  Long overlaps of two colors mean the
product orbit spends a fixed fraction of real time in the corresponding
product region.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .errors import DomainError
from .maps import Biangle, derived_constants
from .timelines import EventTimeline, LogLambda, Scale, generate_timeline, gamma_hat_log, tau_floats

__all__ = [
    "ColorInterval",
    "ColorIntervalSet",
    "Overlap",
    "color_intervals",
    "overlap_report",
    "log_ratio_is_rational",
    "tune_rational_seed",
    "COLORS",
]

COLORS = ("white", "black", "blue", "red")


@dataclass(frozen=True)
class ColorInterval:
    color: str
    start: float
    end: float
    k: int

    @property
    def length(self) -> float:
        return self.end - self.start


@dataclass(frozen=True)
class ColorIntervalSet:
    intervals: tuple
    provenance: tuple = ("first", "second")

    def of(self, color: str) -> list[ColorInterval]:
        return [iv for iv in self.intervals if iv.color == color]

    @classmethod
    def from_tau_events(
        cls,
        first: Sequence[tuple[float, float]],
        second: Sequence[tuple[float, float]],
        provenance: tuple = ("first", "second"),
    ) -> ColorIntervalSet:
        """Build the four families from ``(tau_kA, tau_kB)`` rows of each orbit."""
        out = []
        for rows, (c_a, c_b) in ((first, ("white", "black")), (second, ("blue", "red"))):
            for i, (ta, tb) in enumerate(rows):
                k = i + 1
                if math.isfinite(ta) and math.isfinite(tb) and ta < tb:
                    out.append(ColorInterval(c_a, ta, tb, k))
                if i + 1 < len(rows):
                    nxt = rows[i + 1][0]
                    if math.isfinite(tb) and math.isfinite(nxt) and tb < nxt:
                        out.append(ColorInterval(c_b, tb, nxt, k))
        return cls(tuple(out), provenance)


def color_intervals(first: EventTimeline, second: EventTimeline, scale: Optional[Scale] = None) -> ColorIntervalSet:
    """Color the rescaled legs of two orbits using one common time scale.

    The default scale is the first orbit's own: ``log_Lambda`` of the first
    biangle, or that timeline's default otherwise.  Legs whose rescaled
    length is zero or beyond double range are omitted.
    """
    scale = scale or first.scale
    return ColorIntervalSet.from_tau_events(
        tau_floats(first, scale), tau_floats(second, scale), (first.label or "first", second.label or "second")
    )


@dataclass(frozen=True)
class Overlap:
    first: ColorInterval
    second: ColorInterval
    length: float

    @property
    def start(self) -> float:
        return max(self.first.start, self.second.start)


def overlap_report(c: ColorIntervalSet, pair: tuple[str, str], min_len: float = 0.05) -> list[Overlap]:
    """All intersections of the two color families of length at least ``min_len``, by tau."""
    if not min_len > 0:
        raise DomainError("min_len must be positive")
    ca, cb = pair
    if ca not in COLORS or cb not in COLORS:
        raise DomainError(f"colors must be among {COLORS}")
    xs = sorted(c.of(ca), key=lambda iv: iv.start)
    ys = sorted(c.of(cb), key=lambda iv: iv.start)
    out = []
    i = j = 0
    # Each family is disjoint and sorted, so a two-pointer sweep visits every overlap once.
    while i < len(xs) and j < len(ys):
        a, b = xs[i], ys[j]
        length = min(a.end, b.end) - max(a.start, b.start)
        if length >= min_len:
            out.append(Overlap(a, b, length))
        if a.end <= b.end:
            i += 1
        else:
            j += 1
    out.sort(key=lambda o: o.start)
    return out


def log_ratio_is_rational(x: float, max_denominator: int = 10**6, tol: float = 1e-13) -> tuple[bool, Optional[Fraction]]:
    """Decide whether ``x`` is a ratio ``p/q`` with ``q`` below the cap.

    Walks the continued-fraction convergents of ``x`` and accepts the first
    one within ``tol`` (relative).  Floating-point inputs are always
    rational, so the cap and tolerance are the working definition.
    """
    frac = Fraction(x)
    h0, h1, k0, k1 = 0, 1, 1, 0
    rem = frac
    for _ in range(64):
        a = math.floor(rem)
        h0, h1 = h1, a * h1 + h0
        k0, k1 = k1, a * k1 + k0
        if k1 > max_denominator:
            return False, None
        if abs(x - h1 / k1) <= tol * max(1.0, abs(x)):
            return True, Fraction(h1, k1)
        if rem == a:
            break
        rem = 1 / (rem - a)
    return False, None


def tune_rational_seed(
    first: Biangle,
    z: float,
    second: Biangle,
    *,
    k_ref: int = 40,
    bracket: tuple[float, float] = (1e-6, 0.5),
) -> float:
    """Seed of the second biangle whose phase matches the first orbit's up to an integer.

    Chooses ``z2`` so that ``log_Lambda gamma2(z2) - log_Lambda gamma(z)`` is
    an integer, ``Lambda`` being the first biangle's constant.  Under a
    rational ratio of the two log-constants this makes left edges of white
    and blue intervals recur together.
    """
    from scipy.optimize import brentq

    lam = derived_constants(first).Lambda
    lam2 = derived_constants(second).Lambda
    ln_lam = math.log(lam)
    ref = gamma_hat_log(generate_timeline(first, z, k_ref), k_ref) / ln_lam

    def phase(z2: float) -> float:
        t = generate_timeline(second, z2, k_ref)
        return (t.stamps_a[k_ref].log_float() - k_ref * math.log(lam2)) / ln_lam

    lo, hi = bracket
    p_lo, p_hi = phase(lo), phase(hi)
    # phase decreases with z2; aim at the integer offset nearest the middle of the range
    target_offset = math.floor(0.5 * (p_lo + p_hi) - ref)
    goal = ref + target_offset
    if not (min(p_lo, p_hi) <= goal <= max(p_lo, p_hi)):
        raise DomainError("bracket does not contain a seed with integer phase offset")
    return brentq(lambda s: phase(s) - goal, lo, hi, xtol=1e-15, rtol=1e-14)
