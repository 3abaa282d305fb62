import math
import random

import pytest

from orbitguard.dynamics import KeplerDynamics, LinearDynamics, OrbitalElements
from orbitguard.engine import ProblemInstance, WorldObject, collide_at

# toy gravitational parameter so that a few dozen steps cover a visible arc
TOY_MU = 1.0


def random_linear(rng: random.Random, box: float = 10.0, speed: float = 1.0) -> LinearDynamics:
    p0 = tuple(rng.uniform(-box, box) for _ in range(3))
    v = tuple(rng.uniform(-speed, speed) for _ in range(3))
    return LinearDynamics(p0, v)


def random_toy_elements(rng: random.Random) -> OrbitalElements:
    return OrbitalElements(rng.uniform(0.8, 1.2), rng.uniform(0.0, 0.3), rng.uniform(0.0, 0.5),
                           rng.uniform(0.0, 2 * math.pi), rng.uniform(0.0, 2 * math.pi),
                           rng.uniform(0.0, 2 * math.pi))


def random_instance(rng: random.Random, max_n: int = 20, max_steps: int = 50) -> ProblemInstance:
    """Small instance mixing straight-line and Kepler (toy units) movers.

    Most instances are drawn with no overlap at t=0 so that collisions, when
    they happen, happen at later steps; one in ten allows initial overlaps.
    """
    n = rng.randint(0, max_n)
    steps = rng.randint(1, max_steps)
    kind = rng.choice(["linear", "kepler", "mixed"])
    allow_initial = rng.random() < 0.1
    if kind == "linear":
        dt = rng.choice([0.1, 0.25, 0.5])
        r = rng.uniform(0.3, 1.2)
    else:
        dt = rng.choice([0.02, 0.05])
        r = rng.uniform(0.03, 0.12)

    def draw(k):
        if kind == "linear":
            return random_linear(rng, box=6.0, speed=1.5)
        if kind == "mixed" and k % 3 == 2:
            p0 = tuple(rng.uniform(3.0, 5.0) for _ in range(3))
            return LinearDynamics(p0, tuple(rng.uniform(-1.0, 1.0) for _ in range(3)))
        return KeplerDynamics(random_toy_elements(rng), mu=TOY_MU)

    objs = []
    for k in range(n):
        for _ in range(50):
            obj = WorldObject(k, draw(k), r)
            if allow_initial or not any(collide_at(obj, o, 0, dt) for o in objs):
                break
        objs.append(obj)
    rng.shuffle(objs)
    return ProblemInstance(objs, steps * dt, dt)


def fresh(problem: ProblemInstance) -> ProblemInstance:
    """Copy with reset intervals and independent dynamics caches."""
    objs = [o.clone() for o in problem.objects]
    for o in objs:
        o.lo = o.hi = 0
    return ProblemInstance(objs, problem.horizon, problem.step)


def random_earth_elements(rng: random.Random) -> OrbitalElements:
    a = rng.uniform(6.6e6, 4.5e7)
    e = rng.uniform(0.0, min(0.9, 1.0 - 6.5e6 / a)) if rng.random() < 0.5 else rng.uniform(0.0, 0.01)
    return OrbitalElements(a, e, rng.uniform(0.0, math.pi), rng.uniform(0.0, 2 * math.pi),
                           rng.uniform(0.0, 2 * math.pi), rng.uniform(0.0, 2 * math.pi))


@pytest.fixture
def rng():
    return random.Random(12345)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import ACCEPTANCE_LINES
    except ImportError:
        return
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
