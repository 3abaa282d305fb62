"""Two-body Kepler propagation and interval occupancy boxes.

Only the true anomaly changes under Kepler dynamics, so an object's motion is
a scalar ODE in nu followed by a fixed closed-form map to ECI coordinates.
Bounding the position over a time interval therefore reduces to integrating
nu at the two endpoints (nu is monotone in t) and evaluating the ECI map with
interval arithmetic over ``[nu(t_lo), nu(t_hi)]``.

Dynamics objects work on an integer step grid; ``dt`` converts steps to
seconds. The engine never deals in seconds except through these methods.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Protocol, runtime_checkable

import numba
import numpy as np

from .interval import Interval, add_bounds, cos_bounds, div_bounds, mul_bounds, scale_bounds, sub_bounds

MU_EARTH = 3.986004418e14  # m^3/s^2, WGS-84

Vec3 = tuple[float, float, float]
SpaceBounds = tuple[float, float, float, float, float, float]  # x0 y0 z0 x1 y1 z1


@runtime_checkable
class Dynamics(Protocol):
    """What the collision engine needs from an object's motion model."""

    def position(self, step: int, dt: float) -> Vec3: ...

    def space_bounds(self, lo: int, hi: int, dt: float) -> SpaceBounds:
        """Box containing ``position(s)`` for every step ``lo <= s <= hi``.

        Must be exact (a degenerate box at ``position(lo)``) when ``lo == hi``
        and must shrink or stay equal when the step range shrinks.
        """
        ...

    def radial_range(self, horizon: float) -> tuple[float, float]:
        """Min and max distance from the origin over ``[0, horizon]`` seconds."""
        ...

    def band_key(self) -> float:
        """Representative radius used to place band edges when partitioning."""
        ...


@dataclass(frozen=True)
class OrbitalElements:
    a: float      # semi-major axis, m
    e: float      # eccentricity
    i: float      # inclination, rad
    raan: float   # right ascension of ascending node, rad
    argp: float   # argument of perigee, rad
    nu0: float    # true anomaly at t=0, rad

    def __post_init__(self) -> None:
        if not self.a > 0.0:
            raise ValueError(f"semi-major axis must be positive, got {self.a}")
        if not 0.0 <= self.e < 1.0:
            raise ValueError(f"only elliptical orbits are supported (0 <= e < 1), got e={self.e}")
        for name in ("i", "raan", "argp", "nu0"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    @property
    def perigee(self) -> float:
        return self.a * (1.0 - self.e)

    @property
    def apogee(self) -> float:
        return self.a * (1.0 + self.e)

    def period(self, mu: float = MU_EARTH) -> float:
        return 2.0 * math.pi * math.sqrt(self.a ** 3 / mu)

    def as_tuple(self) -> tuple[float, float, float, float, float, float]:
        return (self.a, self.e, self.i, self.raan, self.argp, self.nu0)


def nu_rate_coefficient(el: OrbitalElements, mu: float = MU_EARTH) -> float:
    p = el.a * (1.0 - el.e * el.e)
    return math.sqrt(mu / (p * p * p))


def nu_dot(nu: float, el: OrbitalElements, mu: float = MU_EARTH) -> float:
    """Rate of change of true anomaly, rad/s."""
    w = 1.0 + el.e * math.cos(nu)
    return nu_rate_coefficient(el, mu) * w * w


@numba.njit(cache=True)
def _rk4(nu, k, e, h, nsteps):
    half = 0.5 * h
    sixth = h / 6.0
    for _ in range(nsteps):
        w = 1.0 + e * math.cos(nu)
        k1 = k * w * w
        w = 1.0 + e * math.cos(nu + half * k1)
        k2 = k * w * w
        w = 1.0 + e * math.cos(nu + half * k2)
        k3 = k * w * w
        w = 1.0 + e * math.cos(nu + h * k3)
        k4 = k * w * w
        nu = nu + sixth * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return nu


@numba.njit(cache=True)
def _rk4_checkpoints(nu, k, e, h, every, count):
    out = np.empty(count)
    for j in range(count):
        nu = _rk4(nu, k, e, h, every)
        out[j] = nu
    return out


class NuTrajectory:
    """True anomaly on the step grid, integrated lazily with fixed-step RK4.

    Every ``every``-th value is kept as a checkpoint; any other step is
    re-integrated from the nearest checkpoint below it, so a lookup costs at
    most ``every - 1`` RK4 steps and the table stays small.
    """

    def __init__(self, el: OrbitalElements, dt: float, mu: float = MU_EARTH, every: int = 32) -> None:
        if not dt > 0.0:
            raise ValueError("dt must be positive")
        self.dt = dt
        self.every = every
        self._k = nu_rate_coefficient(el, mu)
        self._e = el.e
        self._checkpoints = np.array([el.nu0])
        self._memo: dict[int, float] = {}

    def _extend(self, idx: int) -> None:
        have = len(self._checkpoints)
        if idx < have:
            return
        count = max(idx + 1 - have, have // 4 + 1)  # amortised growth, bounded overshoot
        more = _rk4_checkpoints(float(self._checkpoints[-1]), self._k, self._e, self.dt, self.every, count)
        self._checkpoints = np.concatenate((self._checkpoints, more))

    def at(self, step: int) -> float:
        nu = self._memo.get(step)
        if nu is not None:
            return nu
        if step < 0:
            raise ValueError("negative step")
        idx, rem = divmod(step, self.every)
        self._extend(idx)
        nu = float(self._checkpoints[idx])
        if rem:
            nu = _rk4(nu, self._k, self._e, self.dt, rem)
        self._memo[step] = nu
        return nu

    def at_time(self, t: float) -> float:
        """nu at an arbitrary time: grid steps, then one partial RK4 step."""
        if t < 0.0:
            raise ValueError("negative time")
        step = int(t // self.dt)
        nu = self.at(step)
        rest = t - step * self.dt
        if rest > 0.0:
            nu = _rk4(nu, self._k, self._e, rest, 1)
        return nu


def propagate_nu(el: OrbitalElements, t: float, dt: float, mu: float = MU_EARTH) -> float:
    """True anomaly at time ``t`` by RK4 with step ``dt``; unbounded (not wrapped)."""
    return NuTrajectory(el, dt, mu).at_time(t)


@dataclass(frozen=True)
class _Frame:
    """Per-orbit constants of the ECI map.

    With P and Q the perifocal x and y axes expressed in ECI, component k of
    the position is ``rho * (P_k cos nu + Q_k sin nu)``, rewritten as
    ``rho * amp_k * cos(nu - phase_k)`` so nu occurs once per factor.
    """

    p: float
    e: float
    amp: Vec3
    phase: Vec3

    @classmethod
    def of(cls, el: OrbitalElements) -> _Frame:
        cO, sO = math.cos(el.raan), math.sin(el.raan)
        ci, si = math.cos(el.i), math.sin(el.i)
        cw, sw = math.cos(el.argp), math.sin(el.argp)
        P = (cO * cw - sO * ci * sw, sO * cw + cO * ci * sw, si * sw)
        Q = (-cO * sw - sO * ci * cw, -sO * sw + cO * ci * cw, si * cw)
        amp = tuple(math.hypot(P[k], Q[k]) for k in range(3))
        phase = tuple(math.atan2(Q[k], P[k]) for k in range(3))
        return cls(el.a * (1.0 - el.e * el.e), el.e, amp, phase)  # type: ignore[arg-type]

    def point(self, nu: float) -> Vec3:
        rho = self.p / (1.0 + self.e * math.cos(nu))
        a0, a1, a2 = self.amp
        f0, f1, f2 = self.phase
        return (rho * (a0 * math.cos(nu - f0)),
                rho * (a1 * math.cos(nu - f1)),
                rho * (a2 * math.cos(nu - f2)))

    def bounds(self, nu_lo: float, nu_hi: float) -> SpaceBounds:
        # rho = p / (1 + e cos nu), built from the same float ops as point()
        clo, chi = cos_bounds(nu_lo, nu_hi)
        dlo, dhi = scale_bounds(clo, chi, self.e)
        den_lo, den_hi = add_bounds(1.0, 1.0, dlo, dhi)
        rlo, rhi = div_bounds(self.p, self.p, den_lo, den_hi)
        out = []
        for k in range(3):
            slo, shi = sub_bounds(nu_lo, nu_hi, self.phase[k], self.phase[k])
            glo, ghi = cos_bounds(slo, shi)
            glo, ghi = scale_bounds(glo, ghi, self.amp[k])
            out.append(mul_bounds(rlo, rhi, glo, ghi))
        return (out[0][0], out[1][0], out[2][0], out[0][1], out[1][1], out[2][1])


def elements_to_eci(el: OrbitalElements, nu: float) -> Vec3:
    """ECI position at true anomaly ``nu``, meters."""
    return _Frame.of(el).point(nu)


def eci_bounds(el: OrbitalElements, nu: Interval) -> SpaceBounds:
    """Interval evaluation of :func:`elements_to_eci` over a range of true anomaly."""
    return _Frame.of(el).bounds(nu.lo, nu.hi)


class KeplerDynamics:
    """Kepler two-body motion of one object, cached per time step."""

    def __init__(self, el: OrbitalElements, mu: float = MU_EARTH) -> None:
        self.elements = el
        self.mu = mu
        self._frame = _Frame.of(el)
        self._traj: NuTrajectory | None = None
        self._pos: dict[int, Vec3] = {}

    def __getstate__(self):
        # caches are cheap to rebuild and can be large
        return {"elements": self.elements, "mu": self.mu}

    def __setstate__(self, state) -> None:
        self.__init__(state["elements"], state["mu"])

    def __repr__(self) -> str:
        return f"KeplerDynamics({self.elements!r})"

    def trajectory(self, dt: float) -> NuTrajectory:
        tr = self._traj
        if tr is None or tr.dt != dt:
            tr = self._traj = NuTrajectory(self.elements, dt, self.mu)
            self._pos.clear()
        return tr

    def nu(self, step: int, dt: float) -> float:
        return self.trajectory(dt).at(step)

    def position(self, step: int, dt: float) -> Vec3:
        tr = self.trajectory(dt)
        p = self._pos.get(step)
        if p is None:
            p = self._pos[step] = self._frame.point(tr.at(step))
        return p

    def space_bounds(self, lo: int, hi: int, dt: float) -> SpaceBounds:
        if lo == hi:
            x, y, z = self.position(lo, dt)
            return (x, y, z, x, y, z)
        tr = self.trajectory(dt)
        return self._frame.bounds(tr.at(lo), tr.at(hi))

    def radial_range(self, horizon: float = 0.0) -> tuple[float, float]:
        return self.elements.perigee, self.elements.apogee

    def band_key(self) -> float:
        return self.elements.a


def occ_int(el: OrbitalElements, t: Interval, dt: float, mu: float = MU_EARTH) -> SpaceBounds:
    """Box bounding the position over ``t`` (seconds, on the ``dt`` grid)."""
    lo, hi = round(t.lo / dt), round(t.hi / dt)
    return KeplerDynamics(el, mu).space_bounds(lo, hi, dt)


class LinearDynamics:
    """Straight-line motion ``p0 + v t``; handy for hand-built test scenes."""

    def __init__(self, p0: Vec3, v: Vec3) -> None:
        self.p0 = tuple(float(c) for c in p0)
        self.v = tuple(float(c) for c in v)

    def __repr__(self) -> str:
        return f"LinearDynamics(p0={self.p0}, v={self.v})"

    def position(self, step: int, dt: float) -> Vec3:
        t = step * dt
        p, v = self.p0, self.v
        return (p[0] + v[0] * t, p[1] + v[1] * t, p[2] + v[2] * t)

    def space_bounds(self, lo: int, hi: int, dt: float) -> SpaceBounds:
        if lo == hi:
            x, y, z = self.position(lo, dt)
            return (x, y, z, x, y, z)
        t0, t1 = lo * dt, hi * dt
        lows, highs = [], []
        for p, v in zip(self.p0, self.v):
            slo, shi = scale_bounds(t0, t1, v)
            slo, shi = math.nextafter(p + slo, -math.inf), math.nextafter(p + shi, math.inf)
            lows.append(slo)
            highs.append(shi)
        return (lows[0], lows[1], lows[2], highs[0], highs[1], highs[2])

    def radial_range(self, horizon: float) -> tuple[float, float]:
        p, v = np.array(self.p0), np.array(self.v)
        end = p + v * horizon
        vv = float(v @ v)
        s = 0.0 if vv == 0.0 else min(max(-float(p @ v) / vv, 0.0), horizon)
        closest = float(np.linalg.norm(p + v * s))
        return closest, max(float(np.linalg.norm(p)), float(np.linalg.norm(end)))

    def band_key(self) -> float:
        lo, hi = self.radial_range(0.0)
        return 0.5 * (lo + hi)
