"""A descending skew flow on the cylinder whose time averages split evenly between two strips.

The cylinder has an angle ``theta`` and a height ``eta <= 0``; orbits sink
toward ``eta = -inf``.  On each horizontal circle the angle follows a
north-south field ``w_alpha`` whose sink ``alpha = h(eta)`` alternates
between two angles on blocks of unit length in ``xi = sqrt(-eta)``.  The
vertical speed is chosen so that reaching depth ``xi`` takes time
``exp(sqrt(xi)) - 1``; every block therefore lasts about as long as all the
earlier ones together, which keeps the running averages oscillating unless
the two strips are weighted equally.

Orbits are integrated in the geometric parameter ``s = -eta``.  Because the
vertical speed multiplies the whole field, trajectories do not depend on it
and time is attached afterwards from the closed form.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.optimize import brentq

from .errors import ParameterOutOfArc, StepFailure, StripOverlapError, DomainError, HorizonError

__all__ = [
    "TWO_PI",
    "smooth_step",
    "CircleFieldFamily",
    "DescentSchedule",
    "VerticalProfile",
    "OrbitSample",
    "StripOccupancy",
    "PairOccupancy",
    "ValidationReport",
    "w_eval",
    "family_validate",
    "h_eval",
    "profile_eval",
    "integrate_orbit",
    "integrate_orbit_timed",
    "occupancy",
    "pair_occupancy",
    "e1_e2_check",
    "block_end_time",
    "rho_tilde",
    "flatness_check",
    "default_geometry",
    "orbit_segments",
    "ensemble_positions",
    "check_strip_width",
]

TWO_PI = 2.0 * math.pi


def _psi(x: float) -> float:
    return math.exp(-1.0 / x) if x > 0.0 else 0.0


def smooth_step(x: float) -> float:
    """C-infinity step: 0 for ``x <= 0``, 1 for ``x >= 1``, flat at both ends, ``1/2`` at ``1/2``."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    a, b = _psi(x), _psi(1.0 - x)
    return a / (a + b)


def _wrap(x: float) -> float:
    """Representative of ``x`` modulo ``2 pi`` in ``(-pi, pi]``."""
    y = math.fmod(x + math.pi, TWO_PI)
    if y <= 0.0:
        y += TWO_PI
    return y - math.pi


def _mod2pi(x: float) -> float:
    y = math.fmod(x, TWO_PI)
    return y + TWO_PI if y < 0.0 else y


# --- horizontal fields ----------------------------------------------------------------


@dataclass(frozen=True)
class CircleFieldFamily:
    """North-south fields ``w_alpha`` with a source at ``theta_north`` and a sink at ``alpha``.

    Outside the northern arc ``N`` (angular radius ``delta_N``) the field is
    linear with slope ``-2 kappa`` toward the sink.  Its branch cut is placed
    at the north pole, and inside ``N`` the linear branch is blended over the
    outer ``blend_width`` of the arc into a linear source.
    """

    theta_north: float = math.pi
    kappa: float = 1.0
    delta_N: float = 0.6
    arc_I: tuple = (-math.pi / 2, math.pi / 2)
    blend_width: Optional[float] = None

    def __post_init__(self):
        if not self.kappa > 0:
            raise DomainError("kappa must be positive")
        if not (0 < self.delta_N < math.pi):
            raise DomainError("delta_N must lie in (0, pi)")
        bw = self.delta_N if self.blend_width is None else self.blend_width
        if not (0 < bw <= self.delta_N):
            raise DomainError("blend_width must lie in (0, delta_N]")
        object.__setattr__(self, "blend_width", bw)
        lo, hi = self.arc_I
        if not (lo <= hi and hi - lo < TWO_PI):
            raise DomainError("arc_I must be an increasing pair spanning less than a full turn")
        y_lo = _mod2pi(lo - self.theta_north)
        if not (y_lo > self.delta_N and y_lo + (hi - lo) < TWO_PI - self.delta_N):
            raise ParameterOutOfArc("arc_I meets the closure of the northern arc")

    def arc_position(self, alpha: float) -> float:
        """Coordinate of ``alpha`` measured from the north pole, checked against ``arc_I``."""
        lo, hi = self.arc_I
        y_lo = _mod2pi(lo - self.theta_north)
        y = _mod2pi(alpha - self.theta_north)
        if not (y_lo - 1e-12 <= y <= y_lo + (hi - lo) + 1e-12):
            raise ParameterOutOfArc(f"sink parameter {alpha!r} lies outside arc_I={self.arc_I}")
        return y

    def in_north(self, theta: float) -> bool:
        return abs(_wrap(theta - self.theta_north)) < self.delta_N


def _w_at(y: float, y_alpha: float, f: CircleFieldFamily) -> float:
    """Field value at position ``y`` in ``[0, 2 pi)`` measured from the north pole."""
    outer = -2.0 * f.kappa * (y - y_alpha)
    offset = y if y < math.pi else y - TWO_PI
    r = abs(offset)
    if r >= f.delta_N:
        return outer
    inner_edge = f.delta_N - f.blend_width
    weight = smooth_step((r - inner_edge) / f.blend_width)
    return (1.0 - weight) * 2.0 * f.kappa * offset + weight * outer


def w_eval(alpha: float, theta: float, f: CircleFieldFamily) -> float:
    """Angular velocity of ``w_alpha`` at ``theta``."""
    y_alpha = f.arc_position(alpha)
    return _w_at(_mod2pi(theta - f.theta_north), y_alpha, f)


@dataclass(frozen=True)
class ValidationReport:
    passed: bool
    violations: tuple = ()
    checked_alphas: int = 0
    grid: int = 0


def family_validate(
    f: CircleFieldFamily,
    grid: int = 2000,
    *,
    required_rate: Optional[float] = None,
    n_alpha: int = 20,
    fd_step: float = 1e-6,
) -> ValidationReport:
    """Check the north-south properties of the family on a grid.

    For ``n_alpha`` sinks spread over ``arc_I``: the finite-difference
    slope outside ``N`` must stay below ``-required_rate`` (default
    ``kappa``), the field must change sign exactly twice around the circle,
    and the source must be repelling.  Violations name the property and a
    witness ``(alpha, theta)``.
    """
    if grid < 1000:
        raise DomainError("grid must have at least 1000 points")
    rate = f.kappa if required_rate is None else required_rate
    lo, hi = f.arc_I
    alphas = np.linspace(lo, hi, n_alpha)
    # Half-step offset keeps grid points off the zeros themselves.
    thetas = f.theta_north + (np.arange(grid) + 0.5) * TWO_PI / grid
    violations = []
    for alpha in alphas:
        alpha = float(alpha)
        vals = [w_eval(alpha, float(t), f) for t in thetas]
        signs = np.sign(vals)
        changes = int(np.sum(signs != np.roll(signs, 1)))
        if changes != 2:
            violations.append(("two-zeros", (alpha, None), changes))
        for t in thetas:
            t = float(t)
            if f.in_north(t) or abs(_wrap(t - f.theta_north)) < f.delta_N + fd_step:
                continue
            slope = (w_eval(alpha, t + fd_step, f) - w_eval(alpha, t - fd_step, f)) / (2 * fd_step)
            if not slope < -rate:
                violations.append(("uniform-attraction", (alpha, t), slope))
                break
        src = (w_eval(alpha, f.theta_north + fd_step, f) - w_eval(alpha, f.theta_north - fd_step, f)) / (2 * fd_step)
        if not src > 0:
            violations.append(("source-repelling", (alpha, f.theta_north), src))
        if abs(w_eval(alpha, alpha, f)) > 1e-12:
            violations.append(("sink-zero", (alpha, alpha), w_eval(alpha, alpha, f)))
    return ValidationReport(not violations, tuple(violations), len(alphas), grid)


# --- sink schedule --------------------------------------------------------------------


@dataclass(frozen=True)
class DescentSchedule:
    """Sink angle as a function of height.

    Block ``n`` covers ``xi in [n-1, n]``.  For ``n >= 2`` it opens with a
    transition of unit length in ``s = -eta`` from the previous sink to the
    new one; odd blocks rest at ``theta_l`` and even blocks at ``theta_r``.
    """

    theta_l: float = -math.pi / 3
    theta_r: float = math.pi / 3
    bump_primitive: Callable[[float], float] = field(default=smooth_step, compare=False)
    single_plateau: bool = False

    def target(self, n: int) -> float:
        if self.single_plateau:
            return self.theta_l
        return self.theta_l if n % 2 == 1 else self.theta_r

    def breakpoints(self, s_end: float) -> list[float]:
        """Values of ``s`` where the schedule switches between transition and plateau."""
        pts = [0.0]
        n = 2
        while (n - 1) ** 2 < s_end:
            pts.extend([(n - 1) ** 2, (n - 1) ** 2 + 1.0])
            n += 1
        return [p for p in pts if p < s_end] + [s_end]


def h_eval(eta: float, s: DescentSchedule) -> float:
    """Sink angle at height ``eta``."""
    if eta >= 0.0:
        return s.theta_l
    depth = -eta
    n = int(math.floor(math.sqrt(depth))) + 1  # block containing xi = sqrt(depth)
    if n == 1:
        return s.target(1)
    u = depth - (n - 1) ** 2
    prev, tgt = s.target(n - 1), s.target(n)
    if u >= 1.0 or prev == tgt:
        return tgt
    return prev + s.bump_primitive(u) * (tgt - prev)


def block_of(xi: float) -> int:
    return int(math.floor(xi)) + 1


# --- vertical profile -----------------------------------------------------------------


def _tail_dt_ds(s: float) -> float:
    """``dt/ds`` of the closed-form branch ``t = exp(s**(1/4)) - 1``."""
    q = s**0.25
    return math.exp(q) / (4.0 * q**3)


_QUAD_TOL = 1e-13


def _bump(x: float) -> float:
    return _psi(x) * _psi(1.0 - x) if 0.0 < x < 1.0 else 0.0


@dataclass(frozen=True)
class VerticalProfile:
    """Vertical speed ``rho`` with descent time ``exp(sqrt(xi)) - 1`` below ``xi = 1``.

    On ``s = xi**2 in [0, 1]`` the time density ``dt/ds`` starts at 1 (so
    ``rho = 1`` near the top), is blended smoothly into the closed-form branch
    on ``[blend_lo, blend_hi]``, and carries a bump whose amplitude makes the
    total time to ``xi = 1`` equal ``e - 1``.
    """

    blend_lo: float = 0.2
    blend_hi: float = 0.8

    def __post_init__(self):
        if not (0.0 < self.blend_lo < self.blend_hi < 1.0):
            raise DomainError("blend window must satisfy 0 < blend_lo < blend_hi < 1")

    def _base(self, s: float) -> float:
        w = smooth_step((s - self.blend_lo) / (self.blend_hi - self.blend_lo))
        if w == 0.0:
            return 1.0
        return 1.0 + (_tail_dt_ds(s) - 1.0) * w

    def _bump_at(self, s: float) -> float:
        return _bump((s - self.blend_lo) / (self.blend_hi - self.blend_lo))

    @cached_property
    def bump_amplitude(self) -> float:
        target = math.e - 1.0
        base, _ = quad(self._base, 0.0, 1.0, points=[self.blend_lo, self.blend_hi], epsabs=_QUAD_TOL, epsrel=_QUAD_TOL, limit=200)
        mass, _ = quad(self._bump_at, self.blend_lo, self.blend_hi, epsabs=_QUAD_TOL, epsrel=_QUAD_TOL, limit=200)
        return (target - base) / mass

    def dt_ds(self, s: float) -> float:
        """Time density ``1/rho`` at ``s = -eta``."""
        if s <= 0.0:
            return 1.0
        if s >= 1.0:
            return _tail_dt_ds(s)
        return self._base(s) + self.bump_amplitude * self._bump_at(s)

    def rho_s(self, s: float) -> float:
        return 1.0 / self.dt_ds(s)

    def t_of_s(self, s: float) -> float:
        if s <= 0.0:
            return s  # rho = 1 above the top circle
        if s >= 1.0:
            return math.expm1(s**0.25)
        pts = [p for p in (self.blend_lo, self.blend_hi) if p < s]
        val, _ = quad(self.dt_ds, 0.0, s, points=pts or None, epsabs=_QUAD_TOL, epsrel=_QUAD_TOL, limit=200)
        return val

    def t_of_xi(self, xi: float) -> float:
        if xi >= 1.0:
            return math.expm1(math.sqrt(xi))
        return self.t_of_s(xi * xi)

    def s_of_t(self, t: float) -> float:
        """Inverse of ``t_of_s``."""
        if t >= math.e - 1.0:
            return math.log1p(t) ** 4
        if t <= 0.0:
            return t
        return brentq(lambda s: self.t_of_s(s) - t, 0.0, 1.0, xtol=1e-15)


def profile_eval(xi: float, v: VerticalProfile) -> tuple[float, float, float]:
    """``(sigma, rho, t)`` at depth ``xi``: speeds ``d xi/dt`` and ``-d eta/dt`` and the descent time."""
    if xi < 0:
        raise DomainError("depth must be non-negative")
    s = xi * xi
    rho = v.rho_s(s)
    if xi >= 1.0:
        sigma = 2.0 * math.sqrt(xi) * math.exp(-math.sqrt(xi))
    elif xi == 0.0:
        sigma = math.inf
    else:
        sigma = rho / (2.0 * xi)
    return sigma, rho, v.t_of_xi(xi)


def block_end_time(n: int) -> float:
    """Descent time to the end of block ``n``."""
    return math.expm1(math.sqrt(n)) if n > 0 else 0.0


def rho_tilde(zeta: float) -> float:
    """Vertical speed in the compactified height ``zeta = -1/eta``."""
    if zeta <= 0.0:
        return 0.0
    return 4.0 * zeta**-0.75 * math.exp(-(zeta**-0.25))


def flatness_check(zeta: float, order: int = 1, step: Optional[float] = None) -> dict:
    """Central finite-difference magnitudes of ``rho_tilde`` at ``zeta`` for orders ``0..order``."""
    if not (0.0 < zeta <= 1e-4):
        raise DomainError("zeta must lie in (0, 1e-4]")
    if not (1 <= order <= 4):
        raise DomainError("order must lie in 1..4")
    h = zeta / 100.0 if step is None else step
    if h * order / 2.0 >= zeta:
        raise DomainError("finite-difference stencil reaches zeta <= 0")
    out = {0: rho_tilde(zeta)}
    for k in range(1, order + 1):
        acc = 0.0
        for j in range(k + 1):
            acc += (-1) ** (k - j) * math.comb(k, j) * rho_tilde(zeta + (j - k / 2.0) * h)
        out[k] = abs(acc) / h**k
    return out


def default_geometry() -> tuple[CircleFieldFamily, DescentSchedule, VerticalProfile, float]:
    """Family, schedule, profile and strip half-width used when nothing is configured."""
    return CircleFieldFamily(), DescentSchedule(), VerticalProfile(), 0.1


# --- orbit integration ----------------------------------------------------------------


@dataclass(frozen=True)
class OrbitSample:
    """An integrated orbit.

    ``xi`` and ``theta`` hold the accepted solver steps (``theta`` unwrapped);
    ``pieces`` keeps the dense interpolants per schedule segment so the
    orbit can be evaluated anywhere in ``[xi0, xi_end]``.  ``t`` holds
    descent times along the samples, elapsed from the seed.
    """

    xi: np.ndarray
    theta: np.ndarray
    t: np.ndarray
    seed: tuple
    tol: float
    pieces: tuple = field(repr=False, compare=False, default=())
    route: str = "geometric"

    @cached_property
    def _starts(self) -> list[float]:
        return [p[0] for p in self.pieces]

    @property
    def s_start(self) -> float:
        return float(self.xi[0] ** 2)

    @property
    def s_end(self) -> float:
        return float(self.xi[-1] ** 2)

    def theta_at_s(self, s: float) -> float:
        if self.pieces:
            # forgive rounding at the ends, e.g. s recomputed as xi**2
            lo_end, hi_end = self.pieces[0][0], self.pieces[-1][1]
            slack = 1e-12 * max(1.0, hi_end)
            if lo_end - slack <= s < lo_end:
                s = lo_end
            elif hi_end < s <= hi_end + slack:
                s = hi_end
        i = bisect.bisect_right(self._starts, s) - 1
        for j in (i, i - 1):
            if 0 <= j < len(self.pieces):
                lo, hi, sol = self.pieces[j]
                if lo <= s <= hi:
                    return float(sol(s)[0])
        raise HorizonError(f"s={s!r} outside the integrated range")

    def theta_at_xi(self, xi: float) -> float:
        return self.theta_at_s(xi * xi)


def _check_range(xi0: float, xi_end: float, tol: float) -> None:
    if not (xi_end > xi0 >= 0.0):
        raise DomainError("need xi_end > xi0 >= 0")
    if not tol > 0:
        raise DomainError("tol must be positive")


def _check_schedule(f: CircleFieldFamily, s: DescentSchedule) -> None:
    f.arc_position(s.theta_l)
    f.arc_position(s.theta_r)


# LSODA's global error runs roughly ten times its local tolerance on these
# orbits, so the solver is asked for a decade more than the caller's target.
_LOCAL_TOL_FACTOR = 0.1


def _solve(rhs, span, y0, tol, max_step=np.inf):
    rtol = tol * _LOCAL_TOL_FACTOR
    sol = solve_ivp(rhs, span, y0, method="LSODA", rtol=rtol, atol=rtol * 1e-2, dense_output=True, max_step=max_step)
    if sol.status != 0:
        raise StepFailure(f"integrator failed on [{span[0]}, {span[1]}]: {sol.message}")
    return sol


def integrate_orbit(
    theta0: float,
    xi0: float,
    xi_end: float,
    f: CircleFieldFamily,
    s: DescentSchedule,
    v: VerticalProfile,
    tol: float = 1e-9,
) -> OrbitSample:
    """Integrate ``d theta / ds = w_{h(-s)}(theta)`` from depth ``xi0`` to ``xi_end``.

    The schedule is split at its transition boundaries so that every
    solver call sees a smooth right-hand side.  Descent times come from
    the vertical profile, never from integrating the vertical speed.
    """
    _check_range(xi0, xi_end, tol)
    _check_schedule(f, s)
    yn = f.theta_north

    def rhs(sv, y):
        alpha = h_eval(-sv, s)
        return [_w_at(_mod2pi(y[0] - yn), f.arc_position(alpha), f)]

    s0, s1 = xi0 * xi0, xi_end * xi_end
    bps = [p for p in s.breakpoints(s1) if p > s0]
    lo = s0
    theta = float(theta0)
    ss, th, pieces = [s0], [theta], []
    for hi in bps:
        if hi <= lo:
            continue
        sol = _solve(rhs, (lo, hi), [theta], tol)
        pieces.append((lo, hi, sol.sol))
        ss.extend(sol.t[1:].tolist())
        th.extend(sol.y[0, 1:].tolist())
        theta = float(sol.y[0, -1])
        lo = hi
    ss_arr = np.asarray(ss)
    t0 = v.t_of_s(s0)
    times = np.array([v.t_of_s(x) - t0 for x in ss])
    return OrbitSample(np.sqrt(ss_arr), np.asarray(th), times, (float(theta0), -s0), tol, tuple(pieces), "geometric")


def integrate_orbit_timed(
    theta0: float,
    xi0: float,
    xi_end: float,
    f: CircleFieldFamily,
    s: DescentSchedule,
    v: VerticalProfile,
    tol: float = 1e-9,
    unit_speed: bool = False,
) -> OrbitSample:
    """Integrate the full field in time: ``theta' = rho * w``, ``s' = rho``.

    With ``unit_speed`` the vertical speed is replaced by the constant 1.
    This route shares nothing with ``integrate_orbit`` except the field
    itself, so agreement of the two is a check on both.
    """
    _check_range(xi0, xi_end, tol)
    _check_schedule(f, s)
    yn = f.theta_north
    speed = (lambda sv: 1.0) if unit_speed else v.rho_s
    time_of = (lambda sv: sv) if unit_speed else v.t_of_s

    s0, s1 = xi0 * xi0, xi_end * xi_end
    bps = [p for p in s.breakpoints(s1) if p > s0]
    t_start = time_of(s0)
    theta = float(theta0)
    lo_s, lo_t = s0, 0.0
    ts, ss, th = [0.0], [s0], [theta]
    for hi in bps:
        hi_t = time_of(hi) - t_start
        if hi_t <= lo_t:
            continue
        base = lo_s

        # The height is carried as an offset from the segment start so its
        # relative tolerance is meaningful deep down the cylinder.
        def rhs(tv, y, base=base):
            sv = base + y[1]
            r = speed(sv)
            alpha = h_eval(-sv, s)
            return [r * _w_at(_mod2pi(y[0] - yn), f.arc_position(alpha), f), r]

        sol = _solve(rhs, (lo_t, hi_t), [theta, 0.0], tol)
        ts.extend(sol.t[1:].tolist())
        th.extend(sol.y[0, 1:].tolist())
        ss.extend((base + sol.y[1, 1:]).tolist())
        # Pin the height to the breakpoint so segments stay aligned with the schedule.
        theta = float(sol.y[0, -1])
        lo_s, lo_t = hi, hi_t
    xi = np.sqrt(np.maximum(np.asarray(ss), 0.0))
    route = "timed-unit" if unit_speed else "timed"
    return OrbitSample(xi, np.asarray(th), np.asarray(ts), (float(theta0), -s0), tol, (), route)


# --- strip occupancy ------------------------------------------------------------------


def _strip_intervals(orbit: OrbitSample, center: float, eps: float, sub: int = 8) -> list[tuple[float, float]]:
    """Maximal ``s``-intervals on which the orbit lies within ``eps`` of ``center``.

    Each accepted step is sub-sampled through the dense output; every sign
    change of the distance to the strip edge is refined by root finding to
    ``1e-10`` in ``xi``.
    """
    out: list[tuple[float, float]] = []
    open_at: Optional[float] = None
    frac = np.arange(sub) / sub

    for lo, hi, sol in orbit.pieces:
        knots = np.asarray(sol.ts)
        grid = (knots[:-1, None] + np.diff(knots)[:, None] * frac[None, :]).ravel()
        grid = np.append(grid, knots[-1])
        theta = sol(grid)[0]
        vals = np.abs(np.mod(theta - center + math.pi, TWO_PI) - math.pi) - eps
        inside = vals < 0
        if open_at is None and inside[0]:
            open_at = float(grid[0])
        flips = np.nonzero(inside[1:] != inside[:-1])[0]
        for i in flips:
            a, b = float(grid[i]), float(grid[i + 1])
            xtol = max(2.0 * math.sqrt(max(a, 0.0)) * 1e-10, 1e-14)
            root = brentq(lambda x: abs(_wrap(float(sol(x)[0]) - center)) - eps, a, b, xtol=xtol)
            if inside[i + 1]:
                open_at = root
            elif open_at is not None:
                out.append((open_at, root))
                open_at = None
        if open_at is not None and not inside[-1]:
            out.append((open_at, float(grid[-1])))
            open_at = None
    if open_at is not None:
        out.append((open_at, orbit.s_end))
    # Merge intervals split only by a segment boundary.
    merged: list[tuple[float, float]] = []
    for a, b in out:
        if merged and a <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(b, merged[-1][1]))
        elif b > a:
            merged.append((a, b))
    return merged


def _clip_measure(intervals, lo: float, hi: float, weight: Callable[[float], float]) -> float:
    total = 0.0
    for a, b in intervals:
        a2, b2 = max(a, lo), min(b, hi)
        if b2 > a2:
            total += weight(b2) - weight(a2)
    return total


@dataclass(frozen=True)
class StripOccupancy:
    """Time fractions of one orbit in the two strips.

    ``chi_l[i]`` and ``chi_r[i]`` are the fractions of the elapsed time up
    to depth ``xi_grid[i]`` spent in the left and right strips.  Per block
    ``n``, ``alpha[n-1]`` is the share of the block's time spent outside the
    strip of that block's sink and ``opposite[n-1]`` the share spent in the
    other strip.
    """

    epsilon: float
    xi_grid: np.ndarray
    t_grid: np.ndarray
    chi_l: np.ndarray
    chi_r: np.ndarray
    alpha: np.ndarray
    opposite: np.ndarray
    left_intervals: tuple = field(repr=False, default=())
    right_intervals: tuple = field(repr=False, default=())
    t_start: float = 0.0
    profile: VerticalProfile = field(repr=False, default_factory=VerticalProfile)

    def chi_at(self, xi: float) -> tuple[float, float]:
        return _chi(self.left_intervals, self.right_intervals, xi * xi, self.t_start, self.profile.t_of_s)


def _chi(left, right, s_hi: float, t_start: float, time_of) -> tuple[float, float]:
    elapsed = time_of(s_hi) - t_start
    if elapsed <= 0:
        return 0.0, 0.0
    return (
        _clip_measure(left, -math.inf, s_hi, time_of) / elapsed,
        _clip_measure(right, -math.inf, s_hi, time_of) / elapsed,
    )


def check_strip_width(s: DescentSchedule, f: CircleFieldFamily, epsilon: float) -> None:
    half_lr = abs(_wrap(s.theta_r - s.theta_l)) / 2.0
    to_north = min(abs(_wrap(th - f.theta_north)) - f.delta_N for th in (s.theta_l, s.theta_r))
    if not (0 < epsilon < half_lr or s.single_plateau) or not epsilon < to_north / 2.0 or not epsilon > 0:
        raise StripOverlapError(f"strip half-width {epsilon!r} overlaps the other strip or the northern arc")


def occupancy(
    orbit: OrbitSample,
    s: DescentSchedule,
    v: VerticalProfile,
    epsilon: float,
    f: Optional[CircleFieldFamily] = None,
) -> StripOccupancy:
    """Strip occupancy of a geometric orbit, with exact descent-time weights."""
    check_strip_width(s, f or CircleFieldFamily(), epsilon)
    if not orbit.pieces:
        raise DomainError("occupancy needs an orbit with dense output (geometric route)")
    left = _strip_intervals(orbit, s.theta_l, epsilon)
    right = _strip_intervals(orbit, s.theta_r, epsilon) if not s.single_plateau else []
    s0, s1 = orbit.s_start, orbit.s_end
    t0 = v.t_of_s(s0)
    xi0, xi1 = math.sqrt(s0), math.sqrt(s1)
    first_block, last_block = block_of(xi0), max(block_of(xi0), math.ceil(xi1))
    xs, ts, cl, cr, al, op = [], [], [], [], [], []
    for n in range(first_block, last_block + 1):
        lo = max(s0, float((n - 1) ** 2))
        hi = min(s1, float(n * n))
        if hi <= lo:
            continue
        dur = v.t_of_s(hi) - v.t_of_s(lo)
        in_l = _clip_measure(left, lo, hi, v.t_of_s)
        in_r = _clip_measure(right, lo, hi, v.t_of_s)
        target_is_left = s.target(n) == s.theta_l
        own, other = (in_l, in_r) if target_is_left else (in_r, in_l)
        al.append(min(1.0, max(0.0, 1.0 - own / dur)))
        op.append(other / dur)
        chl, chr_ = _chi(left, right, hi, t0, v.t_of_s)
        xs.append(math.sqrt(hi))
        ts.append(v.t_of_s(hi))
        cl.append(chl)
        cr.append(chr_)
    return StripOccupancy(
        epsilon,
        np.asarray(xs),
        np.asarray(ts),
        np.asarray(cl),
        np.asarray(cr),
        np.asarray(al),
        np.asarray(op),
        tuple(left),
        tuple(right),
        t0,
        v,
    )


# --- pairs ----------------------------------------------------------------------------


@dataclass(frozen=True)
class PairOccupancy:
    """Fractions of common elapsed time spent in each product strip, per horizon."""

    horizons: np.ndarray
    s_ll: np.ndarray
    s_rr: np.ndarray
    s_lr: np.ndarray
    s_rl: np.ndarray
    xi_first: np.ndarray

    @property
    def remainder(self) -> np.ndarray:
        return 1.0 - (self.s_ll + self.s_rr + self.s_lr + self.s_rl)


def _to_elapsed(intervals, t0: float, time_of) -> list[tuple[float, float]]:
    return [(time_of(a) - t0, time_of(b) - t0) for a, b in intervals]


def _intersect_measure(xs, ys, horizon: float) -> float:
    i = j = 0
    total = 0.0
    while i < len(xs) and j < len(ys):
        a = max(xs[i][0], ys[j][0])
        b = min(xs[i][1], ys[j][1], horizon)
        if b > a:
            total += b - a
        if xs[i][1] <= ys[j][1]:
            i += 1
        else:
            j += 1
    return total


def pair_occupancy(
    orbit1: OrbitSample,
    orbit2: OrbitSample,
    s: DescentSchedule,
    v: VerticalProfile,
    epsilon: float,
    horizons: Optional[Sequence[float]] = None,
    f: Optional[CircleFieldFamily] = None,
) -> PairOccupancy:
    """Product-strip occupancy of two orbits started at the same moment.

    Both orbits are measured on the common elapsed time.  By default the
    horizons are the first orbit's block ends that both orbits reach.
    """
    check_strip_width(s, f or CircleFieldFamily(), epsilon)
    occ = []
    for o in (orbit1, orbit2):
        t0 = v.t_of_s(o.s_start)
        left = _to_elapsed(_strip_intervals(o, s.theta_l, epsilon), t0, v.t_of_s)
        right = _to_elapsed(_strip_intervals(o, s.theta_r, epsilon), t0, v.t_of_s) if not s.single_plateau else []
        occ.append((left, right, v.t_of_s(o.s_end) - t0, t0))
    reach = min(occ[0][2], occ[1][2])
    if horizons is None:
        t01 = occ[0][3]
        hs = []
        for n in range(1, int(math.sqrt(orbit1.s_end)) + 1):
            h = block_end_time(n) - t01
            if 0 < h <= reach * (1 + 1e-12):
                hs.append(min(h, reach))
        horizons = hs
    out = {k: [] for k in ("ll", "rr", "lr", "rl")}
    xi_first = []
    for h in horizons:
        if not (0 < h <= reach * (1 + 1e-12)):
            raise HorizonError(f"horizon {h!r} is not covered by both orbits")
        (l1, r1, _, t01), (l2, r2, _, _) = occ
        out["ll"].append(_intersect_measure(l1, l2, h) / h)
        out["rr"].append(_intersect_measure(r1, r2, h) / h)
        out["lr"].append(_intersect_measure(l1, r2, h) / h)
        out["rl"].append(_intersect_measure(r1, l2, h) / h)
        xi_first.append(math.sqrt(v.s_of_t(h + t01)))
    arr = {k: np.asarray(vs) for k, vs in out.items()}
    return PairOccupancy(np.asarray(horizons, dtype=float), arr["ll"], arr["rr"], arr["lr"], arr["rl"], np.asarray(xi_first))


# --- block-sum identities -------------------------------------------------------------


def e1_e2_check(n: int, alpha: Sequence[float], opposite: Optional[Sequence[float]] = None) -> dict:
    """Alternating block sums whose total is ``chi_r - chi_l`` at the end of block ``n``.

    ``E1`` is the sum for an orbit that sits in each block's strip the whole
    time, ``E2`` corrects for time spent outside it and ``E3`` (zero unless
    ``opposite`` is given) for time spent in the other strip.  ``bound`` is
    the last block's share of the total time, which dominates ``|E1|``.
    """
    if n < 1 or len(alpha) < n:
        raise DomainError("alpha needs at least n entries")
    t = [block_end_time(k) for k in range(n + 1)]
    e1 = sum((-1) ** k * (t[k] - t[k - 1]) for k in range(1, n + 1)) / t[n]
    e2 = sum(alpha[k - 1] * (-1) ** (k + 1) * (t[k] - t[k - 1]) for k in range(1, n + 1)) / t[n]
    e3 = 0.0
    if opposite is not None:
        e3 = sum(opposite[k - 1] * (-1) ** (k + 1) * (t[k] - t[k - 1]) for k in range(1, n + 1)) / t[n]
    bound = (t[n] - t[n - 1]) / t[n]
    return {"E1": e1, "E2": e2, "E3": e3, "bound": bound, "holds": abs(e1) <= bound}


def orbit_segments(
    orbit: OrbitSample,
    s: DescentSchedule,
    v: VerticalProfile,
    epsilon: float,
) -> list[tuple[float, float, str]]:
    """Elapsed-time segments ``(start, end, label)`` with labels ``L``, ``R`` or ``O`` (outside both strips)."""
    t0 = v.t_of_s(orbit.s_start)
    marks = [(a, b, "L") for a, b in _strip_intervals(orbit, s.theta_l, epsilon)]
    if not s.single_plateau:
        marks += [(a, b, "R") for a, b in _strip_intervals(orbit, s.theta_r, epsilon)]
    marks.sort()
    end = v.t_of_s(orbit.s_end) - t0
    out, cur = [], 0.0
    for a, b, lab in marks:
        ta, tb = v.t_of_s(a) - t0, v.t_of_s(b) - t0
        if ta > cur:
            out.append((cur, ta, "O"))
        if tb > ta:
            out.append((max(ta, cur), tb, lab))
            cur = tb
    if end > cur:
        out.append((cur, end, "O"))
    return out


def ensemble_positions(
    orbits: Sequence[OrbitSample],
    times: Sequence[float],
    s: DescentSchedule,
    v: VerticalProfile,
    epsilon: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Fraction of an ensemble inside the left and right strips at each elapsed time."""
    left = np.zeros(len(times))
    right = np.zeros(len(times))
    for o in orbits:
        t0 = v.t_of_s(o.s_start)
        for i, t in enumerate(times):
            sv = v.s_of_t(t + t0)
            if sv > o.s_end:
                raise HorizonError("time beyond an orbit's integrated range")
            th = o.theta_at_s(sv)
            if abs(_wrap(th - s.theta_l)) < epsilon:
                left[i] += 1
            elif abs(_wrap(th - s.theta_r)) < epsilon:
                right[i] += 1
    n = max(len(orbits), 1)
    return left / n, right / n
