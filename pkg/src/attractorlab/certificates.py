"""Separation certificates for two increasing sequences of double-log return times."""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

from .errors import DomainError
from .numbers import TowerValue, tower_difference

__all__ = ["SeparationCertificate", "Refusal", "separation_analysis"]


@dataclass(frozen=True)
class SeparationCertificate:
    """Tails beyond ``index_m`` stay at least ``gap`` apart.

    ``mode`` is ``"NumericTail"`` (checked exhaustively on the recorded
    values) or ``"InductiveTower"`` (the doubly-exponential induction fired).
    ``witness`` is the 1-based index pair ``(k, n)`` where the induction
    fired, with ``k`` indexing the sequence named by ``witness_side``.
    """

    index_m: int
    gap: float
    mode: str
    witness: Optional[tuple[int, int]] = None
    witness_side: Optional[str] = None


@dataclass(frozen=True)
class Refusal:
    """No certificate: the sequences interleave within ``eps`` at every recorded level."""

    reason: str

    def __bool__(self) -> bool:
        return False


def _check_increasing(seq: Sequence[_Point], name: str) -> None:
    for x, y in zip(seq, seq[1:]):
        if not x < y:
            raise DomainError(f"sequence {name} is not strictly increasing")


class _Point:
    """A sequence element ordered as a tower, measured as a float when it fits one."""

    __slots__ = ("tower", "raw")

    def __init__(self, v):
        if isinstance(v, TowerValue):
            self.tower = v
            self.raw = v.to_float() if v.is_plain() else None
        else:
            self.raw = float(v)
            self.tower = TowerValue.from_float(self.raw)

    def __lt__(self, other: "_Point") -> bool:
        if self.raw is not None and other.raw is not None:
            return self.raw < other.raw
        return self.tower < other.tower


def _dist(x: _Point, y: _Point) -> float:
    if x.raw is not None and y.raw is not None:
        return abs(x.raw - y.raw)
    return abs(tower_difference(x.tower, y.tower))


def _inductive_witness(a, b, eps: float, d_const: float):
    """First index of ``a`` that is ``eps``-isolated from ``b`` with a large enough anchor."""
    threshold = math.log((1.0 + d_const) / eps)
    for k, ak in enumerate(a):
        n = bisect.bisect_left(b, ak)
        lower = b[n - 1] if n > 0 else None
        upper = b[n] if n < len(b) else None
        if lower is not None and _dist(ak, lower) < eps:
            continue
        if upper is not None and _dist(upper, ak) < eps:
            continue
        if lower is None and upper is None:
            continue
        anchor = lower if lower is not None else ak
        # exp(anchor) * eps - |dC| > 1  <=>  anchor > ln((1 + |dC|) / eps)
        if _Point(threshold) < anchor:
            n_idx = n if lower is not None else n + 1
            return k + 1, n_idx
    return None


def separation_analysis(
    tau1: Sequence[Union[float, TowerValue]],
    tau2: Sequence[Union[float, TowerValue]],
    eps: float,
    constants: Optional[tuple[float, float]] = None,
    min_tail: int = 2,
) -> Union[SeparationCertificate, Refusal]:
    """Certify that the tails of two increasing sequences are separated.

    With ``constants = (C1, C2)`` (the additive constants of two recurrences
    ``x -> exp(x) + C``) the inductive test is tried first: once an element
    of one sequence is ``eps``-isolated from the other and its lower
    neighbour ``b`` satisfies ``exp(b) * eps - |C1 - C2| > 1``, every later
    pair is at least one unit apart.  Otherwise the recorded tails are
    checked directly.  Interleaving within ``eps`` everywhere yields a
    ``Refusal`` rather than an error.
    """
    if not eps > 0:
        raise DomainError("eps must be positive")
    a = [_Point(v) for v in tau1]
    b = [_Point(v) for v in tau2]
    _check_increasing(a, "tau1")
    _check_increasing(b, "tau2")
    if not a or not b:
        return Refusal("empty sequence")

    if constants is not None:
        d_const = abs(constants[0] - constants[1])
        for side, (x, y) in (("first", (a, b)), ("second", (b, a))):
            w = _inductive_witness(x, y, eps, d_const)
            if w is not None:
                k, n = w
                return SeparationCertificate(max(k, n), 1.0, "InductiveTower", (k, n), side)

    length = min(len(a), len(b))
    tail = max(min_tail, 1)
    for m in range(0, length - tail + 1):
        ta, tb = a[m:], b[m:]
        d = _min_cross_distance(ta, tb)
        if d >= eps:
            return SeparationCertificate(m, d, "NumericTail")
    return Refusal("sequences interleave within eps at every recorded level")


def _min_cross_distance(a: Sequence[_Point], b: Sequence[_Point]) -> float:
    best = math.inf
    for x in a:
        n = bisect.bisect_left(b, x)
        for j in (n - 1, n):
            if 0 <= j < len(b):
                best = min(best, _dist(x, b[j]))
    return best
