"""Overflow-free number types for quantities that outgrow double precision.

``LogValue`` keeps a positive quantity as its natural logarithm, which is
enough for times that grow geometrically.  ``TowerValue`` keeps a quantity as
an iterated exponential ``exp(exp(...exp(r)))`` and survives the
tower-exponential growth of saddle-node return times.  ``LogTime`` is the
bookkeeping type used by timelines: the log of a time, split into a possibly
enormous anchor and a small float offset so that ratios of nearby times stay
exact even when the times themselves are towers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import total_ordering

from .errors import DomainError

__all__ = ["LogValue", "TowerValue", "LogTime", "tower_difference", "E"]

E = math.e
# Beyond this gap exp(-gap) underflows to zero, so log-addition is a no-op.
LOG_ADD_CUTOFF = 745.0
# Exponentiating a mantissa above this would overflow a double.
EXP_SAFE = 700.0
_FLOAT_SAFE = 1e300


def _safe_exp(x: float) -> float:
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


@total_ordering
@dataclass(frozen=True)
class LogValue:
    """A positive quantity stored by its natural logarithm.

    ``LogValue(-inf)`` stands for zero.  Multiplication adds logs exactly;
    addition is the usual stable log-sum-exp.

    >>> (LogValue.from_real(2.0) * LogValue.from_real(3.0)).to_float()
    6.000000000000001
    >>> big, tiny = LogValue(1000.0), LogValue(1.0)
    >>> (big + tiny) is big
    True
    """

    log: float

    @classmethod
    def from_real(cls, x: float) -> LogValue:
        if x < 0 or math.isnan(x):
            raise DomainError(f"LogValue needs a non-negative real, got {x!r}")
        return cls(math.log(x)) if x > 0 else cls(-math.inf)

    @classmethod
    def zero(cls) -> LogValue:
        return cls(-math.inf)

    def __add__(self, other: LogValue) -> LogValue:
        hi, lo = (self, other) if self.log >= other.log else (other, self)
        if lo.log == -math.inf or hi.log - lo.log > LOG_ADD_CUTOFF:
            return hi
        return LogValue(hi.log + math.log1p(math.exp(lo.log - hi.log)))

    def __mul__(self, other: LogValue) -> LogValue:
        return LogValue(self.log + other.log)

    def __truediv__(self, other: LogValue) -> LogValue:
        return LogValue(self.log - other.log)

    def __lt__(self, other: LogValue) -> bool:
        return self.log < other.log

    def ratio(self, other: LogValue) -> float:
        """Plain-real value of ``self / other``."""
        return _safe_exp(self.log - other.log)

    def to_float(self) -> float:
        return _safe_exp(self.log)


def _normalize(level: int, r: float) -> tuple[int, float]:
    if math.isnan(r):
        raise DomainError("TowerValue mantissa is NaN")
    if math.isinf(r):
        raise DomainError("TowerValue mantissa must be finite")
    if level < 0:
        raise DomainError(f"TowerValue level must be >= 0, got {level}")
    for _ in range(256):
        if r >= E:
            level, r = level + 1, math.log(r)
        elif level >= 1 and r < 1.0:
            level, r = level - 1, math.exp(r)
        else:
            break
    return level, r


@total_ordering
@dataclass(frozen=True, init=False)
class TowerValue:
    """The real number ``exp^(level)(mantissa)``.

    Representations are normalized so that level-0 values are plain reals
    below ``e`` and higher levels carry a mantissa in ``[1, e)``.  With that
    window the pair ``(level, mantissa)`` is unique and sorts exactly like
    the numbers it denotes.

    >>> TowerValue.from_float(1e9).level
    3
    >>> TowerValue(2, 3.0) == TowerValue(3, math.log(3.0))
    True
    """

    level: int
    mantissa: float

    def __init__(self, level: int, mantissa: float):
        lv, r = _normalize(int(level), float(mantissa))
        object.__setattr__(self, "level", lv)
        object.__setattr__(self, "mantissa", r)

    @classmethod
    def from_float(cls, x: float) -> TowerValue:
        return cls(0, x)

    @classmethod
    def from_log(cls, log_x: float) -> TowerValue:
        """The value ``exp(log_x)`` without forming it."""
        return cls(1, log_x) if log_x >= 1.0 else cls(0, math.exp(log_x))

    def _key(self) -> tuple[int, float]:
        return (self.level, self.mantissa)

    def __lt__(self, other: object) -> bool:
        if isinstance(other, (int, float)):
            other = TowerValue.from_float(other)
        if not isinstance(other, TowerValue):
            return NotImplemented
        return self._key() < other._key()

    def __eq__(self, other: object) -> bool:
        if isinstance(other, (int, float)):
            other = TowerValue.from_float(other)
        if not isinstance(other, TowerValue):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self) -> int:
        return hash(self._key())

    def to_float(self) -> float:
        """Plain-real value, ``inf`` when it does not fit a double."""
        x = self.mantissa
        for _ in range(self.level):
            if x > 709.78:
                return math.inf
            x = math.exp(x)
        return x

    def is_plain(self) -> bool:
        return abs(self.to_float()) < _FLOAT_SAFE

    def exp(self) -> TowerValue:
        return TowerValue(self.level + 1, self.mantissa)

    def ln(self) -> TowerValue:
        if self.level >= 1:
            return TowerValue(self.level - 1, self.mantissa)
        if self.mantissa <= 0:
            raise DomainError(f"logarithm of non-positive value {self.mantissa!r}")
        return TowerValue(0, math.log(self.mantissa))

    def add_real(self, c: float) -> TowerValue:
        """``self + c``; the constant is absorbed once it drops below resolution."""
        x = self.to_float()
        if abs(x) < _FLOAT_SAFE:
            return TowerValue.from_float(x + c)
        return self

    def __repr__(self) -> str:
        return f"TowerValue(level={self.level}, mantissa={self.mantissa!r})"


def tower_difference(a: TowerValue, b: TowerValue) -> float:
    """Approximate ``a - b`` as a float, saturating to +-inf for huge gaps."""
    if a == b:
        return 0.0
    fa, fb = a.to_float(), b.to_float()
    if abs(fa) < _FLOAT_SAFE and abs(fb) < _FLOAT_SAFE:
        return fa - fb
    # At least one side is astronomically large; recurse on the logs.
    if a.level == 0 or b.level == 0 or a.mantissa <= 0 or b.mantissa <= 0:
        return math.inf if a > b else -math.inf
    d = tower_difference(a.ln(), b.ln())
    if d == 0.0:
        return 0.0
    return math.inf if d > 0 else -math.inf


ZERO_ANCHOR = TowerValue(0, 0.0)


@total_ordering
@dataclass(frozen=True)
class LogTime:
    """A non-negative time ``t`` with ``ln t = anchor + offset``.

    The anchor may be a tower far beyond double range; the offset is a small
    float.  Two times sharing an anchor have an exactly computable ratio.
    """

    anchor: TowerValue
    offset: float

    @classmethod
    def from_log(cls, log_t: float) -> LogTime:
        return cls(ZERO_ANCHOR, float(log_t))

    @classmethod
    def from_float(cls, t: float) -> LogTime:
        if t < 0:
            raise DomainError(f"negative time {t!r}")
        return cls(ZERO_ANCHOR, math.log(t) if t > 0 else -math.inf)

    @classmethod
    def zero(cls) -> LogTime:
        return cls(ZERO_ANCHOR, -math.inf)

    def log_minus(self, other: LogTime) -> float:
        """``ln(self) - ln(other)``, saturating to +-inf for tower-scale gaps."""
        if self.offset == -math.inf or other.offset == -math.inf:
            if self.offset == other.offset:
                return 0.0
            return -math.inf if self.offset == -math.inf else math.inf
        if self.anchor == other.anchor:
            return self.offset - other.offset
        gap = tower_difference(self.anchor, other.anchor)
        if math.isinf(gap):
            return gap
        return gap + (self.offset - other.offset)

    def ratio(self, other: LogTime) -> float:
        return _safe_exp(self.log_minus(other))

    def __lt__(self, other: LogTime) -> bool:
        return self.log_minus(other) < 0

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LogTime):
            return NotImplemented
        return self.log_minus(other) == 0

    def __hash__(self) -> int:
        return hash((self.anchor, self.offset))

    def log(self) -> TowerValue:
        """``ln t`` as a tower value."""
        if self.anchor.is_plain():
            return TowerValue.from_float(self.anchor.to_float() + self.offset)
        return self.anchor

    def log_float(self) -> float:
        if self.offset == -math.inf:
            return -math.inf
        a = self.anchor.to_float()
        return a + self.offset if math.isfinite(a) else math.inf

    def to_log_value(self) -> LogValue:
        return LogValue(self.log_float())

    def to_tower(self) -> TowerValue:
        if self.offset == -math.inf:
            return TowerValue.from_float(0.0)
        return self.log().exp()

    def to_float(self) -> float:
        return _safe_exp(self.log_float())

    def loglog(self) -> TowerValue:
        """``ln ln t``; requires ``t > 1``."""
        inner = self.log()
        if inner <= TowerValue.from_float(0.0):
            raise DomainError("ln ln t needs t > 1")
        return inner.ln()
