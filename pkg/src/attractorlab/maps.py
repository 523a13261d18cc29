"""Exact-model local maps of saddles and saddle-nodes and the return maps built from them.

Every transversal carries a coordinate in the open chart ``(0, 1)`` with zero
on the separatrix.  The maps here keep only the leading terms of the
classical asymptotics, so each formula is exact for the model and every
property can be checked to machine precision.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Union

from .errors import (
    ChartExitError,
    ContractionViolation,
    DomainError,
    InvariantViolation,
    RangeWarning,
    StepTooLarge,
)
from .numbers import EXP_SAFE, TowerValue

__all__ = [
    "SaddleParams",
    "SaddleNodeParams",
    "Loop",
    "Biangle",
    "ModifiedBowen",
    "PolycycleModel",
    "DerivedConstants",
    "StepResult",
    "saddle_local",
    "saddle_node_local",
    "poincare_step",
    "loop_zeta_step",
    "mbe_tau_step",
    "derived_constants",
    "saddle_oracle",
]


@dataclass(frozen=True)
class SaddleParams:
    """Hyperbolic saddle with eigenvalues ``-mu`` and ``lambda_``.

    ``c`` is the coefficient of the monodromy map ``x -> c * x**nu``.
    """

    mu: float
    lambda_: float
    c: float = 1.0

    def __post_init__(self):
        for name in ("mu", "lambda_", "c"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise InvariantViolation(f"saddle parameter {name} must be positive, got {v!r}")

    @property
    def nu(self) -> float:
        """Characteristic number ``mu / lambda``."""
        return self.mu / self.lambda_


@dataclass(frozen=True)
class SaddleNodeParams:
    """Saddle-node with smooth orbital normal form parameter ``a`` and eigenvalue ``-b``."""

    a: float
    b: float

    def __post_init__(self):
        if not (self.b > 0 and math.isfinite(self.b)):
            raise InvariantViolation(f"saddle-node parameter b must be positive, got {self.b!r}")
        if not math.isfinite(self.a):
            raise InvariantViolation("saddle-node parameter a must be finite")


@dataclass(frozen=True)
class Loop:
    """Separatrix loop of one saddle.

    ``return_time`` is the bounded time spent away from the saddle on each
    wind; the return leg itself is normalized to the identity map.
    """

    saddle: SaddleParams
    return_time: float = 1.0
    kind: str = field(default="loop", init=False)

    def __post_init__(self):
        if not self.return_time > 0:
            raise InvariantViolation("loop return time must be positive")
        derived_constants(self)


@dataclass(frozen=True)
class Biangle:
    """Two hyperbolic saddles ``A`` and ``B`` joined by two separatrix connections."""

    saddle_a: SaddleParams
    saddle_b: SaddleParams
    kind: str = field(default="biangle", init=False)

    def __post_init__(self):
        derived_constants(self)


@dataclass(frozen=True)
class ModifiedBowen:
    """Biangle whose first vertex is a contracting saddle-node."""

    saddle_node: SaddleNodeParams
    saddle: SaddleParams
    kind: str = field(default="mbe", init=False)


PolycycleModel = Union[Loop, Biangle, ModifiedBowen]


@dataclass(frozen=True)
class DerivedConstants:
    nu: Optional[float] = None
    Lambda: Optional[float] = None
    Lambda0: Optional[float] = None
    C: Optional[float] = None
    c_time: Optional[float] = None


@dataclass(frozen=True)
class StepResult:
    next: float
    turn_time: float
    time_in_B: float

    def __iter__(self):
        return iter((self.next, self.turn_time, self.time_in_B))


def _check_chart(x: float) -> None:
    if not (0.0 < x < 1.0):
        raise DomainError(f"transversal coordinate must lie in (0, 1), got {x!r}")


def saddle_local(x: float, p: SaddleParams) -> tuple[float, float]:
    """Pass a saddle: returns ``(c * x**nu, ln(1/x) / lambda)``.

    >>> saddle_local(0.1, SaddleParams(2.0, 1.0))
    (0.010000000000000002, 2.302585092994046)
    """
    _check_chart(x)
    return p.c * x**p.nu, -math.log(x) / p.lambda_


def saddle_node_local(x: float, p: SaddleNodeParams) -> tuple[float, float]:
    """Pass a saddle-node: returns ``(x**-a * exp(-1/x), 1 / (b x))``.

    Emits ``RangeWarning`` when the image leaves the unit chart, which means
    the starting point is too far from the polycycle for the model.
    """
    _check_chart(x)
    image = x ** (-p.a) * math.exp(-1.0 / x)
    if image >= 1.0:
        warnings.warn(
            f"saddle-node image {image:.6g} left the unit chart; start closer to the polycycle",
            RangeWarning,
            stacklevel=2,
        )
    return image, 1.0 / (p.b * x)


def poincare_step(x: float, m: PolycycleModel) -> StepResult:
    """One full turn of the return map on the entry transversal of the first vertex."""
    _check_chart(x)
    if isinstance(m, ModifiedBowen):
        mid, t_first = saddle_node_local(x, m.saddle_node)
        if mid >= 1.0:
            raise ChartExitError(f"intermediate coordinate {mid!r} left the chart")
        nxt, t_second = saddle_local(mid, m.saddle)
    elif isinstance(m, Biangle):
        mid, t_first = saddle_local(x, m.saddle_a)
        if mid >= 1.0:
            raise ChartExitError(f"intermediate coordinate {mid!r} left the chart")
        nxt, t_second = saddle_local(mid, m.saddle_b)
    elif isinstance(m, Loop):
        nxt, t_first = saddle_local(x, m.saddle)
        t_second = m.return_time
    else:
        raise TypeError(f"unknown model {m!r}")
    if nxt >= 1.0:
        raise ChartExitError(f"image {nxt!r} left the chart")
    if not nxt < x:
        raise ContractionViolation(f"step from {x!r} did not contract (got {nxt!r})")
    return StepResult(nxt, t_first + t_second, t_second)


def loop_zeta_step(zeta: float, p: SaddleParams) -> float:
    """Loop return map in the coordinate ``zeta = ln(1/x)``: ``nu * zeta - ln c``."""
    out = p.nu * zeta - math.log(p.c)
    if not out > zeta:
        raise DomainError(f"zeta={zeta!r} is too small for the map to expand")
    return out


def mbe_tau_step(tau: TowerValue, m: ModifiedBowen) -> TowerValue:
    """Asymptotic recurrence ``tau -> exp(tau) + C`` in double-log time.

    While ``exp(tau)`` fits a double the sum is formed directly.  Beyond
    that the constant is below the resolution of the mantissa and the step
    is a pure level increment.
    """
    if not isinstance(m, ModifiedBowen):
        raise TypeError("mbe_tau_step needs a ModifiedBowen model")
    if not isinstance(tau, TowerValue):
        tau = TowerValue.from_float(float(tau))
    c_const = derived_constants(m).C
    x = tau.to_float()
    if x <= EXP_SAFE:
        return TowerValue.from_float(math.exp(x) + c_const)
    return tau.exp()


def derived_constants(m: PolycycleModel) -> DerivedConstants:
    """Characteristic constants of a model, validating its invariants."""
    if isinstance(m, Loop):
        nu = m.saddle.nu
        if not nu > 1:
            raise InvariantViolation(f"loop needs nu > 1, got {nu!r}")
        return DerivedConstants(nu=nu)
    if isinstance(m, Biangle):
        a, b = m.saddle_a, m.saddle_b
        lam = (a.mu * b.mu) / (a.lambda_ * b.lambda_)
        if not lam > 1:
            raise InvariantViolation(f"biangle needs Lambda > 1, got {lam!r}")
        q = a.mu / b.lambda_
        return DerivedConstants(Lambda=lam, Lambda0=(lam + q) / (1 + q))
    if isinstance(m, ModifiedBowen):
        b, s = m.saddle_node.b, m.saddle
        return DerivedConstants(
            nu=s.nu,
            C=math.log(b * s.mu / (b + s.lambda_)),
            c_time=1.0 / b + 1.0 / s.lambda_,
        )
    raise TypeError(f"unknown model {m!r}")


def _rk4_gain(z: float) -> float:
    """Amplification factor of one classical RK4 step on ``u' = k u`` with ``z = k h``."""
    return 1.0 + z + z * z / 2.0 + z**3 / 6.0 + z**4 / 24.0


def _rk4_linear_step(state: tuple[float, float], lam: float, mu: float, h: float) -> tuple[float, float]:
    x, y = state
    fx = lambda v: lam * v
    fy = lambda v: -mu * v
    k1x, k1y = fx(x), fy(y)
    k2x, k2y = fx(x + 0.5 * h * k1x), fy(y + 0.5 * h * k1y)
    k3x, k3y = fx(x + 0.5 * h * k2x), fy(y + 0.5 * h * k2y)
    k4x, k4y = fx(x + h * k3x), fy(y + h * k3y)
    return (
        x + h / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x),
        y + h / 6.0 * (k1y + 2 * k2y + 2 * k3y + k4y),
    )


def saddle_oracle(
    x0: float,
    p: SaddleParams,
    step: float = 1e-5,
    check: bool = True,
    stepwise: bool = False,
) -> tuple[float, float]:
    """Reference transit through the linear saddle by fixed-step RK4.

    Integrates ``x' = lambda x``, ``y' = -mu y`` from ``(x0, 1)`` to the exit
    section ``x = 1`` and returns ``(exit coordinate, transit time)``.  On a
    linear field ``n`` RK4 steps multiply each coordinate by the step's
    amplification factor raised to ``n``; the default route evaluates that
    power directly, which is the same arithmetic the step loop performs and
    keeps a million-step transit cheap.  ``stepwise=True`` runs the literal
    loop instead.  The final partial step is sized so the RK4 update lands
    on ``x = 1``.  The exit coordinate carries the monodromy coefficient
    ``c`` of the chart on the exit transversal.

    With ``check`` set, ``StepTooLarge`` is raised when the result misses the
    closed form by more than ``1e-6``.
    """
    _check_chart(x0)
    if not (0 < step <= 1e-4):
        raise StepTooLarge(f"oracle step must lie in (0, 1e-4], got {step!r}")
    lam, mu = p.lambda_, p.mu
    gx, gy = _rk4_gain(lam * step), _rk4_gain(-mu * step)

    if stepwise:
        n, state = 0, (x0, 1.0)
        while True:
            nxt = _rk4_linear_step(state, lam, mu, step)
            if nxt[0] >= 1.0:
                break
            state, n = nxt, n + 1
        x_n, y_n = state
    else:
        n = int(math.floor(-math.log(x0) / math.log(gx)))
        # Guard the floor against rounding at the boundary.
        while n > 0 and n * math.log(gx) + math.log(x0) >= 0.0:
            n -= 1
        while (n + 1) * math.log(gx) + math.log(x0) < 0.0:
            n += 1
        x_n = x0 * math.exp(n * math.log(gx))
        y_n = math.exp(n * math.log(gy))

    # Partial step h' with x_n * gain(lam h') = 1; the gain is monotone in h'.
    target = 1.0 / x_n
    lo, hi = 0.0, step
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _rk4_gain(lam * mid) < target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-18:
            break
    h_last = 0.5 * (lo + hi)
    exit_coord = p.c * y_n * _rk4_gain(-mu * h_last)
    time = n * step + h_last
    if check:
        ref_img = p.c * x0**p.nu
        ref_t = -math.log(x0) / lam
        if abs(exit_coord - ref_img) > 1e-6 * ref_img or abs(time - ref_t) > 1e-6:
            raise StepTooLarge(f"oracle missed tolerance at x0={x0!r}, step={step!r}")
    return exit_coord, time
