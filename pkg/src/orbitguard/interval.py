"""Closed-interval arithmetic over floats.

Every result is widened outward by one ulp per endpoint instead of switching
the FPU rounding mode, so containment holds without platform-specific code.

The module has two layers. The ``*_bounds`` functions work on raw
``(lo, hi)`` floats and are what the hot paths call; :class:`Interval` wraps
them with operators for readable code and tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

TWO_PI = 2.0 * math.pi
_INF = math.inf


class DivisionByIntervalContainingZero(ZeroDivisionError):
    pass


def _down(x: float) -> float:
    return math.nextafter(x, -_INF)


def _up(x: float) -> float:
    return math.nextafter(x, _INF)


def add_bounds(alo: float, ahi: float, blo: float, bhi: float) -> tuple[float, float]:
    return _down(alo + blo), _up(ahi + bhi)


def sub_bounds(alo: float, ahi: float, blo: float, bhi: float) -> tuple[float, float]:
    return _down(alo - bhi), _up(ahi - blo)


def mul_bounds(alo: float, ahi: float, blo: float, bhi: float) -> tuple[float, float]:
    p1 = alo * blo
    p2 = alo * bhi
    p3 = ahi * blo
    p4 = ahi * bhi
    return _down(min(p1, p2, p3, p4)), _up(max(p1, p2, p3, p4))


def scale_bounds(lo: float, hi: float, k: float) -> tuple[float, float]:
    """Multiply by a scalar constant."""
    if k >= 0.0:
        return _down(lo * k), _up(hi * k)
    return _down(hi * k), _up(lo * k)


def div_bounds(alo: float, ahi: float, blo: float, bhi: float) -> tuple[float, float]:
    if blo <= 0.0 <= bhi:
        raise DivisionByIntervalContainingZero(f"divisor [{blo}, {bhi}] contains zero")
    q1 = alo / blo
    q2 = alo / bhi
    q3 = ahi / blo
    q4 = ahi / bhi
    return _down(min(q1, q2, q3, q4)), _up(max(q1, q2, q3, q4))


def _cos_hits(lo: float, hi: float) -> tuple[bool, bool]:
    """Whether [lo, hi] (width < 2*pi) contains a maximum / minimum of cos."""
    base = lo % TWO_PI
    top = base + (hi - lo)
    # after reduction base is in [0, 2pi) and top < base + 2pi < 4pi
    has_max = base == 0.0 or top >= TWO_PI
    has_min = base <= math.pi <= top or top >= 3.0 * math.pi
    return has_max, has_min


def cos_bounds(lo: float, hi: float) -> tuple[float, float]:
    if hi - lo >= TWO_PI:
        return -1.0, 1.0
    c_lo = math.cos(lo)
    c_hi = math.cos(hi)
    has_max, has_min = _cos_hits(lo, hi)
    out_lo = -1.0 if has_min else max(-1.0, _down(min(c_lo, c_hi)))
    out_hi = 1.0 if has_max else min(1.0, _up(max(c_lo, c_hi)))
    return out_lo, out_hi


def sin_bounds(lo: float, hi: float) -> tuple[float, float]:
    if hi - lo >= TWO_PI:
        return -1.0, 1.0
    s_lo = math.sin(lo)
    s_hi = math.sin(hi)
    # sin x peaks where x - pi/2 is a cos peak
    has_max, has_min = _cos_hits(lo - 0.5 * math.pi, hi - 0.5 * math.pi)
    out_lo = -1.0 if has_min else max(-1.0, _down(min(s_lo, s_hi)))
    out_hi = 1.0 if has_max else min(1.0, _up(max(s_lo, s_hi)))
    return out_lo, out_hi


@dataclass(frozen=True, slots=True)
class Interval:
    """A closed interval ``[lo, hi]`` with ``lo <= hi``."""

    lo: float
    hi: float

    def __post_init__(self) -> None:
        if not self.lo <= self.hi:
            raise ValueError(f"invalid interval [{self.lo}, {self.hi}]")

    @classmethod
    def point(cls, x: float) -> Interval:
        return cls(x, x)

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def is_point(self) -> bool:
        return self.lo == self.hi

    def contains(self, x: float | Interval) -> bool:
        if isinstance(x, Interval):
            return self.lo <= x.lo and x.hi <= self.hi
        return self.lo <= x <= self.hi

    def __contains__(self, x: float) -> bool:
        return self.lo <= x <= self.hi

    def overlaps(self, other: Interval) -> bool:
        return self.lo <= other.hi and other.lo <= self.hi

    def __add__(self, other: Interval | float) -> Interval:
        o = _coerce(other)
        return Interval(*add_bounds(self.lo, self.hi, o.lo, o.hi))

    __radd__ = __add__

    def __sub__(self, other: Interval | float) -> Interval:
        o = _coerce(other)
        return Interval(*sub_bounds(self.lo, self.hi, o.lo, o.hi))

    def __rsub__(self, other: float) -> Interval:
        return _coerce(other) - self

    def __neg__(self) -> Interval:
        return Interval(-self.hi, -self.lo)

    def __mul__(self, other: Interval | float) -> Interval:
        o = _coerce(other)
        return Interval(*mul_bounds(self.lo, self.hi, o.lo, o.hi))

    __rmul__ = __mul__

    def __truediv__(self, other: Interval | float) -> Interval:
        o = _coerce(other)
        return Interval(*div_bounds(self.lo, self.hi, o.lo, o.hi))

    def __rtruediv__(self, other: float) -> Interval:
        return _coerce(other) / self


def _coerce(x: Interval | float) -> Interval:
    if isinstance(x, Interval):
        return x
    return Interval(float(x), float(x))


def add(a: Interval, b: Interval) -> Interval:
    return a + b


def sub(a: Interval, b: Interval) -> Interval:
    return a - b


def mul(a: Interval, b: Interval) -> Interval:
    return a * b


def div(a: Interval, b: Interval) -> Interval:
    return a / b


def sin(a: Interval) -> Interval:
    return Interval(*sin_bounds(a.lo, a.hi))


def cos(a: Interval) -> Interval:
    return Interval(*cos_bounds(a.lo, a.hi))
