import math
import pickle
import random

import numpy as np
import pytest

from orbitguard.dynamics import (MU_EARTH, KeplerDynamics, LinearDynamics, NuTrajectory, OrbitalElements,
                                 eci_bounds, elements_to_eci, nu_dot, occ_int, propagate_nu)
from orbitguard.interval import Interval

from conftest import random_earth_elements


def rot_z(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]])


def rot_x(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[1, 0, 0], [0, c, -s], [0, s, c]])


def eci_oracle(el: OrbitalElements, nu: float) -> np.ndarray:
    rho = el.a * (1 - el.e ** 2) / (1 + el.e * math.cos(nu))
    perifocal = np.array([rho * math.cos(nu), rho * math.sin(nu), 0.0])
    return rot_z(el.raan) @ rot_x(el.i) @ rot_z(el.argp) @ perifocal


def inside(p, b, slack=0.0):
    return all(b[k] - slack <= p[k] <= b[k + 3] + slack for k in range(3))


def test_elements_validation():
    with pytest.raises(ValueError):
        OrbitalElements(-1, 0, 0, 0, 0, 0)
    with pytest.raises(ValueError):
        OrbitalElements(7e6, 1.0, 0, 0, 0, 0)
    with pytest.raises(ValueError):
        OrbitalElements(7e6, 0.1, float("inf"), 0, 0, 0)


def test_nu_dot_circular():
    el = OrbitalElements(7e6, 0.0, 0, 0, 0, 0)
    expected = math.sqrt(MU_EARTH / 7e6 ** 3)
    assert expected == pytest.approx(1.078e-3, rel=1e-3)
    for nu in (0.0, 1.0, 4.0):
        assert nu_dot(nu, el) == pytest.approx(expected, rel=1e-14)


def test_nu_dot_perigee_apogee_ratio():
    el = OrbitalElements(7e6, 0.1, 0, 0, 0, 0)
    assert nu_dot(0.0, el) / nu_dot(math.pi, el) == pytest.approx((1.1 / 0.9) ** 2, rel=1e-12)
    assert (1.1 / 0.9) ** 2 == pytest.approx(1.4938, abs=1e-4)


def test_nu_dot_positive(rng):
    for _ in range(1000):
        el = random_earth_elements(rng)
        assert nu_dot(rng.uniform(-10, 10), el) > 0


def test_propagate_zero_time():
    el = OrbitalElements(7e6, 0.3, 0.1, 0.2, 0.3, 1.25)
    assert propagate_nu(el, 0.0, 1.0) == 1.25


def test_circular_matches_closed_form_over_period():
    for a in (6.8e6, 2.0e7, 4.2164e7):
        el = OrbitalElements(a, 0.0, 0.5, 1.0, 2.0, 0.3)
        period = el.period()
        n = math.sqrt(MU_EARTH / a ** 3)
        for frac in (0.25, 0.5, 1.0):
            t = frac * period
            got = propagate_nu(el, t, 0.5)
            assert got - 0.3 == pytest.approx(n * t, rel=1e-9)
    el = OrbitalElements(7e6, 0.0, 0, 0, 0, 0.0)
    assert propagate_nu(el, el.period(), 0.5) == pytest.approx(2 * math.pi, rel=1e-9)


def test_eccentric_period_closure():
    el = OrbitalElements(2.6e7, 0.7, 1.1, 0.4, 4.7, 0.9)
    got = propagate_nu(el, el.period(), 1e-2)
    assert abs(got - (0.9 + 2 * math.pi)) < 1e-6


def test_trajectory_is_strictly_increasing(rng):
    for _ in range(20):
        el = random_earth_elements(rng)
        tr = NuTrajectory(el, 5.0)
        vals = [tr.at(k) for k in range(0, 400)]
        assert all(b > a for a, b in zip(vals, vals[1:]))
        # random access agrees with sequential access
        tr2 = NuTrajectory(el, 5.0)
        assert tr2.at(399) == vals[399] and tr2.at(17) == vals[17]


def test_eci_examples():
    el = OrbitalElements(7e6, 0.0, 0, 0, 0, 0)
    assert np.allclose(elements_to_eci(el, 0.0), (7e6, 0, 0), atol=1e-6)
    assert np.allclose(elements_to_eci(el, math.pi / 2), (0, 7e6, 0), atol=1e-6)


def test_eci_against_rotation_matrix_oracle(rng):
    for _ in range(1000):
        el = random_earth_elements(rng)
        nu = rng.uniform(-20, 20)
        got = np.array(elements_to_eci(el, nu))
        assert np.allclose(got, eci_oracle(el, nu), rtol=0, atol=1e-8 * el.a)


def test_perigee_norm_and_radius_bounds(rng):
    for _ in range(1000):
        el = random_earth_elements(rng)
        assert np.linalg.norm(elements_to_eci(el, 0.0)) == pytest.approx(el.a * (1 - el.e), rel=1e-12)
        for nu in np.linspace(0, 2 * math.pi, 7):
            r = np.linalg.norm(elements_to_eci(el, nu))
            assert el.perigee * (1 - 1e-12) <= r <= el.apogee * (1 + 1e-12)


def test_point_interval_is_exact(rng):
    for _ in range(200):
        el = random_earth_elements(rng)
        dyn = KeplerDynamics(el)
        k = rng.randint(0, 500)
        p = dyn.position(k, 0.1)
        b = dyn.space_bounds(k, k, 0.1)
        assert b == p + p
        # the interval path on a point input is within an ulp-scale widening
        ib = eci_bounds(el, Interval.point(dyn.nu(k, 0.1)))
        assert inside(p, ib)
        assert max(ib[j + 3] - ib[j] for j in range(3)) <= 1e-7 * el.a


def test_full_period_box_contains_orbit():
    el = OrbitalElements(7e6, 0.0, 0.0, 0.0, 0.0, 0.0)
    dt = 1.0
    steps = math.ceil(el.period() / dt)
    b = occ_int(el, Interval(0.0, steps * dt), dt)
    assert b[0] <= -7e6 and b[1] <= -7e6 and b[3] >= 7e6 and b[4] >= 7e6
    assert abs(b[2]) < 1e-6 and abs(b[5]) < 1e-6


def test_containment_of_sampled_points(rng):
    dt = 2.0
    for _ in range(300):
        el = random_earth_elements(rng)
        dyn = KeplerDynamics(el)
        lo = rng.randint(0, 300)
        hi = lo + rng.randint(0, 300)
        b = dyn.space_bounds(lo, hi, dt)
        for k in {lo, hi, *(rng.randint(lo, hi) for _ in range(20))}:
            assert inside(dyn.position(k, dt), b)


def test_nested_intervals_give_nested_boxes(rng):
    dt = 3.0
    for _ in range(300):
        dyn = KeplerDynamics(random_earth_elements(rng))
        lo = rng.randint(0, 200)
        hi = lo + rng.randint(0, 400)
        lo1 = rng.randint(lo, hi)
        hi1 = rng.randint(lo1, hi)
        outer, inner = dyn.space_bounds(lo, hi, dt), dyn.space_bounds(lo1, hi1, dt)
        assert all(outer[j] <= inner[j] and inner[j + 3] <= outer[j + 3] for j in range(3))


def test_box_volume_shrinks_with_interval_width():
    dyn = KeplerDynamics(OrbitalElements(8e6, 0.2, 0.7, 0.1, 0.2, 0.3))
    dt = 1.0

    def diag(lo, hi):
        b = dyn.space_bounds(lo, hi, dt)
        return math.dist(b[:3], b[3:])

    widths = [2 ** k for k in range(12, -1, -1)]
    sizes = [diag(1000, 1000 + w) for w in widths]
    assert all(b <= a for a, b in zip(sizes, sizes[1:]))
    assert diag(1000, 1000) == 0.0


def test_dynamics_pickle_drops_caches():
    dyn = KeplerDynamics(OrbitalElements(7e6, 0.01, 0.1, 0.2, 0.3, 0.4))
    p = dyn.position(100, 0.5)
    clone = pickle.loads(pickle.dumps(dyn))
    assert clone.position(100, 0.5) == p


def test_radial_range_is_perigee_apogee():
    el = OrbitalElements(1e7, 0.25, 0, 0, 0, 0)
    assert KeplerDynamics(el).radial_range() == pytest.approx((7.5e6, 1.25e7))


def test_linear_dynamics():
    d = LinearDynamics((1.0, 2.0, 3.0), (0.5, -1.0, 0.0))
    assert d.position(4, 0.5) == (2.0, 0.0, 3.0)
    b = d.space_bounds(0, 4, 0.5)
    assert b[0] <= 1.0 and b[3] >= 2.0 and b[1] <= 0.0 and b[4] >= 2.0
    lo, hi = d.radial_range(2.0)
    assert lo <= math.dist((0, 0, 0), d.position(4, 0.5)) <= hi
