import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from orbitguard import interval as iv
from orbitguard.interval import DivisionByIntervalContainingZero, Interval


def test_add_examples():
    assert iv.add(Interval(1, 2), Interval(2, 4)).contains(Interval(3, 6))
    assert iv.add(Interval(1, 2), Interval(2, 4)).width <= 3 + 1e-14
    assert iv.add(Interval(0, 0), Interval(5, 5)).contains(5.0)
    r = iv.add(Interval(-1, 1), Interval(-1, 1))
    assert r.lo == pytest.approx(-2) and r.hi == pytest.approx(2)


def test_mul_examples():
    r = iv.mul(Interval(-1, 1), Interval(-1, 1))
    assert r.lo == pytest.approx(-1) and r.hi == pytest.approx(1)
    r = iv.mul(Interval(2, 3), Interval(4, 5))
    assert r.lo == pytest.approx(8) and r.hi == pytest.approx(15)
    r = iv.mul(Interval(0, 0), Interval(-3, 7))
    assert r.lo == pytest.approx(0) and r.hi == pytest.approx(0)


def test_x_times_x_dependency_overapproximates():
    x = Interval(-1, 1)
    r = x * x  # true range is [0, 1]
    assert r.lo <= -1 + 1e-15


def test_sin_cos_examples():
    r = iv.sin(Interval(0, 0))
    assert abs(r.lo) < 1e-300 and abs(r.hi) < 1e-300
    r = iv.sin(Interval(0, math.pi))
    # dense-sampling oracle
    xs = np.linspace(0, math.pi, 100001)
    assert r.lo <= np.sin(xs).min() and r.hi >= np.sin(xs).max()
    assert r.lo == pytest.approx(0, abs=1e-15) and r.hi == pytest.approx(1)
    r = iv.cos(Interval(0, 2 * math.pi))
    assert (r.lo, r.hi) == (-1.0, 1.0)


def test_trig_wide_interval_is_full_range():
    assert (iv.sin(Interval(3.0, 3.0 + 2 * math.pi)).lo, iv.sin(Interval(3.0, 100.0)).hi) == (-1.0, 1.0)


def test_div_examples():
    r = iv.div(Interval(6, 8), Interval(2, 2))
    assert r.lo == pytest.approx(3) and r.hi == pytest.approx(4)
    r = iv.div(Interval(1, 1), Interval(2, 4))
    assert r.lo == pytest.approx(0.25) and r.hi == pytest.approx(0.5)
    with pytest.raises(DivisionByIntervalContainingZero):
        iv.div(Interval(1, 2), Interval(-1, 1))
    with pytest.raises(ZeroDivisionError):
        Interval(1, 2) / Interval(0, 3)


def test_invalid_interval_rejected():
    with pytest.raises(ValueError):
        Interval(2, 1)
    with pytest.raises(ValueError):
        Interval(float("nan"), 1)


finite = st.floats(-1e6, 1e6, allow_nan=False)


@st.composite
def intervals(draw, lo=-1e3, hi=1e3):
    a = draw(st.floats(lo, hi, allow_nan=False))
    b = draw(st.floats(lo, hi, allow_nan=False))
    return Interval(min(a, b), max(a, b))


def _sample(rng, a: Interval, k: int):
    pts = [a.lo, a.hi]
    pts += [rng.uniform(a.lo, a.hi) for _ in range(k)]
    return pts


BINARY = [(iv.add, lambda x, y: x + y), (iv.sub, lambda x, y: x - y), (iv.mul, lambda x, y: x * y)]


@pytest.mark.parametrize("op,scalar", BINARY)
def test_binary_containment_sampled(op, scalar):
    rng = random.Random(7)
    for _ in range(200):
        a = Interval(*sorted((rng.uniform(-50, 50), rng.uniform(-50, 50))))
        b = Interval(*sorted((rng.uniform(-50, 50), rng.uniform(-50, 50))))
        r = op(a, b)
        for x in _sample(rng, a, 5):
            for y in _sample(rng, b, 5):
                assert scalar(x, y) in r


def test_div_containment_sampled():
    rng = random.Random(8)
    for _ in range(300):
        a = Interval(*sorted((rng.uniform(-50, 50), rng.uniform(-50, 50))))
        lo = rng.uniform(0.01, 20)
        b = Interval(lo, lo + rng.uniform(0, 20))
        if rng.random() < 0.5:
            b = -b
        r = iv.div(a, b)
        for x in _sample(rng, a, 5):
            for y in _sample(rng, b, 5):
                assert x / y in r


@pytest.mark.parametrize("op,scalar", [(iv.sin, math.sin), (iv.cos, math.cos)])
def test_trig_containment_sampled(op, scalar):
    rng = random.Random(9)
    for _ in range(1000):
        lo = rng.uniform(-100, 100)
        a = Interval(lo, lo + rng.choice([1e-6, 0.1, 1.0, 3.0, 7.0]) * rng.random())
        r = op(a)
        for x in _sample(rng, a, 20):
            assert scalar(x) in r


@given(intervals(), intervals())
@settings(max_examples=300, deadline=None)
def test_binary_monotone(a, b):
    # shrink both operands and check the result nests
    a1 = Interval(a.lo + 0.25 * a.width, a.hi - 0.25 * a.width)
    b1 = Interval(b.lo + 0.25 * b.width, b.hi - 0.25 * b.width)
    for op, _ in BINARY:
        assert op(a, b).contains(op(a1, b1))


@given(intervals(-50, 50))
@settings(max_examples=300, deadline=None)
def test_trig_monotone(a):
    a1 = Interval(a.lo + 0.3 * a.width, a.hi - 0.3 * a.width)
    assert iv.sin(a).contains(iv.sin(a1))
    assert iv.cos(a).contains(iv.cos(a1))


@given(finite, finite)
def test_point_operations_are_tight(x, y):
    px, py = Interval.point(x), Interval.point(y)
    for op, scalar in BINARY:
        r = op(px, py)
        v = scalar(x, y)
        assert v in r
        # one ulp of widening on each side at most
        assert r.lo >= math.nextafter(math.nextafter(v, -math.inf), -math.inf)
        assert r.hi <= math.nextafter(math.nextafter(v, math.inf), math.inf)


@given(st.floats(-1e3, 1e3, allow_nan=False))
def test_point_trig_is_tight(x):
    for op, scalar in ((iv.sin, math.sin), (iv.cos, math.cos)):
        r = op(Interval.point(x))
        assert scalar(x) in r
        assert r.width <= 4 * math.ulp(1.0)
