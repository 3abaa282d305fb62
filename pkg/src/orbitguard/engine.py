"""Discrete-time n-to-n collision detection.

Three detectors share one problem description:

* :func:`detect_brute` checks every pair at every time step.
* :func:`detect_basic_aabb` rebuilds a spatial AABB tree at every step.
* :func:`detect_4d` keeps one tree of space-time boxes and advances each
  object with its own, adaptively sized time interval.

Time is handled as integer step counts; seconds only appear at the dynamics
boundary and in the returned witness.
"""

from __future__ import annotations

import copy
import heapq
import itertools
import json
import logging
from dataclasses import dataclass, field
from typing import Hashable, Sequence

from .dynamics import Dynamics
from .geometry import AabbTree4d, Bounds, Box3, Box4, overlaps
from .interval import Interval

log = logging.getLogger(__name__)

ObjectId = Hashable

VERIFY_BRUTE_LIMIT = 20  # full pairwise rechecks only on instances this small


def id_key(oid: ObjectId) -> tuple:
    """Total order on ids: natural order within a type, types grouped by name."""
    return (type(oid).__name__, oid)


class InvariantViolation(AssertionError):
    """A correctness invariant of the 4D algorithm failed during a verified run."""

    def __init__(self, message: str, state: dict | None = None) -> None:
        self.state = state or {}
        dump = json.dumps(self.state, default=str, sort_keys=True)
        super().__init__(f"{message}\nstate: {dump}" if state else message)


@dataclass(eq=False)
class WorldObject:
    id: ObjectId
    dynamics: Dynamics
    r: float
    lo: int = 0  # current time interval, in steps
    hi: int = 0

    def __post_init__(self) -> None:
        if not self.r >= 0.0:
            raise ValueError(f"radius must be >= 0, got {self.r}")

    def t_interval(self, dt: float) -> Interval:
        return Interval(self.lo * dt, self.hi * dt)

    def clone(self) -> WorldObject:
        return WorldObject(self.id, copy.deepcopy(self.dynamics), self.r, self.lo, self.hi)


@dataclass
class ProblemInstance:
    objects: list[WorldObject]
    horizon: float  # T, seconds
    step: float     # delta, seconds

    def __post_init__(self) -> None:
        if not self.step > 0.0:
            raise ValueError("time step must be positive")
        if not self.horizon >= self.step:
            raise ValueError("horizon must be at least one time step")
        ratio = self.horizon / self.step
        if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
            raise ValueError(f"horizon {self.horizon} is not an integer multiple of step {self.step}")
        ids = [o.id for o in self.objects]
        if len(set(ids)) != len(ids):
            raise ValueError("object ids must be unique")

    @property
    def n_steps(self) -> int:
        return round(self.horizon / self.step)


@dataclass(frozen=True)
class CollisionWitness:
    a: ObjectId
    b: ObjectId
    t: float
    step: int

    def key(self) -> tuple:
        lo, hi = sorted((id_key(self.a), id_key(self.b)))
        return (self.step, lo, hi)


def occ(obj: WorldObject, step: int, dt: float) -> Box3:
    """Occupancy cube of ``obj`` at a grid time."""
    return Box3.cube(obj.dynamics.position(step, dt), obj.r)


def _occ_bounds(obj: WorldObject, step: int, dt: float) -> Bounds:
    x, y, z = obj.dynamics.position(step, dt)
    r = obj.r
    t = step * dt
    return (x - r, y - r, z - r, t, x + r, y + r, z + r, t)


def _occ4d_bounds(obj: WorldObject, dt: float) -> Bounds:
    x0, y0, z0, x1, y1, z1 = obj.dynamics.space_bounds(obj.lo, obj.hi, dt)
    r = obj.r
    return (x0 - r, y0 - r, z0 - r, obj.lo * dt, x1 + r, y1 + r, z1 + r, obj.hi * dt)


def occ_4d(obj: WorldObject, dt: float) -> Box4:
    """Space-time box of ``obj`` over its current interval."""
    return Box4.from_bounds(_occ4d_bounds(obj, dt))


def collide_at(a: WorldObject, b: WorldObject, step: int, dt: float) -> bool:
    return overlaps(_occ_bounds(a, step, dt), _occ_bounds(b, step, dt))


def _witness(a: WorldObject, b: WorldObject, step: int, dt: float) -> CollisionWitness:
    return CollisionWitness(a.id, b.id, step * dt, step)


def first_collision_at(objects: Sequence[WorldObject], step: int, dt: float) -> tuple[int, int] | None:
    """Index pair of the first colliding pair at ``step`` in (i, j) loop order."""
    boxes = [_occ_bounds(o, step, dt) for o in objects]
    n = len(boxes)
    for i in range(n):
        bi = boxes[i]
        for j in range(i + 1, n):
            if overlaps(bi, boxes[j]):
                return i, j
    return None


def detect_brute(p: ProblemInstance, first_step: int = 0, last_step: int | None = None) -> CollisionWitness | None:
    """Check every pair at every grid time; O(T/dt * n^2)."""
    objs, dt = p.objects, p.step
    last = p.n_steps if last_step is None else last_step
    if len(objs) < 2:
        return None
    for k in range(first_step, last + 1):
        hit = first_collision_at(objs, k, dt)
        if hit is not None:
            return _witness(objs[hit[0]], objs[hit[1]], k, dt)
    return None


def detect_basic_aabb(p: ProblemInstance) -> CollisionWitness | None:
    """Fresh spatial AABB tree per grid time; O(T/dt * n log n)."""
    objs, dt = p.objects, p.step
    if len(objs) < 2:
        return None
    by_id = {o.id: o for o in objs}
    for k in range(p.n_steps + 1):
        tree = AabbTree4d()
        for o in objs:
            box = _occ_bounds(o, k, dt)
            hits = tree._query(box)
            if hits:
                return _witness(by_id[hits[0]], o, k, dt)
            tree.insert(o.id, box)
    return None


def advance_interval(lo: int, hi: int, horizon: int) -> tuple[int, int]:
    """Next time interval after ``[lo, hi]`` (in steps): starts one step later,
    twice as long (at least one step), clipped to the horizon."""
    prev = hi - lo
    nxt = 2 * prev if prev > 0 else 1
    new_lo = hi + 1
    new_hi = new_lo + nxt
    if new_hi > horizon:
        new_hi = horizon
    return new_lo, new_hi


def advance_time(obj: WorldObject, horizon: int) -> None:
    obj.lo, obj.hi = advance_interval(obj.lo, obj.hi, horizon)


@dataclass
class EngineStats:
    iterations: int = 0
    resolve_passes: int = 0
    tree_updates: int = 0
    tree_queries: int = 0
    queue_pushes: int = 0
    max_tree_height: int = 0
    tree_size: int = 0

    def as_dict(self) -> dict:
        return dict(self.__dict__)


class FourDEngine:
    """One run of the 4D AABB-tree detector over a problem instance.

    The tree and a min-heap on each object's interval end are kept in step
    through :meth:`insert`, :meth:`update` and :meth:`remove`. With
    ``verify=True`` the loop invariants are asserted at the top of every
    iteration (see :meth:`verify_loop_invariants`).
    """

    def __init__(self, problem: ProblemInstance, verify: bool = False, telemetry_every: int = 0,
                 time_weight: float = 1.0) -> None:
        self.problem = problem
        self.dt = problem.step
        self.horizon = problem.n_steps
        self.objects = problem.objects
        self.by_id = {o.id: o for o in self.objects}
        self.tree = AabbTree4d(time_weight)
        self.verify = verify
        self.telemetry_every = telemetry_every
        self.stats = EngineStats()
        # heap entries are (t_max, id rank, version); ranks break ties by smallest id
        self._by_rank = sorted(self.objects, key=lambda o: id_key(o.id))
        self._rank = {o.id: k for k, o in enumerate(self._by_rank)}
        self._heap: list[tuple[int, int, int]] = []
        self._version: dict[ObjectId, int] = {}
        self._tick = itertools.count()
        # verification state
        self._checked_upto = -1
        self._last_lo: dict[ObjectId, int] = {}

    # -- tree + queue hooks ------------------------------------------------

    def _push(self, obj: WorldObject) -> None:
        ver = next(self._tick)
        self._version[obj.id] = ver
        heapq.heappush(self._heap, (obj.hi, self._rank[obj.id], ver))
        self.stats.queue_pushes += 1

    def insert(self, obj: WorldObject, box: Bounds) -> None:
        self.tree.insert(obj.id, box)
        self._push(obj)

    def update(self, obj: WorldObject) -> None:
        self.tree.update(obj.id, _occ4d_bounds(obj, self.dt))
        self.stats.tree_updates += 1
        self._push(obj)

    def remove(self, obj: WorldObject) -> None:
        self.tree.remove(obj.id)
        self._version.pop(obj.id, None)

    def smallest_max_time_object(self) -> WorldObject:
        heap, version = self._heap, self._version
        while True:
            hi, rank, ver = heap[0]
            obj = self._by_rank[rank]
            if version.get(obj.id) == ver:
                return obj
            heapq.heappop(heap)

    def query_object(self, v: WorldObject) -> list[ObjectId]:
        self.stats.tree_queries += 1
        hits = self.tree._query(self.tree.box_of(v.id))
        return [h for h in hits if h != v.id]

    # -- algorithm steps ---------------------------------------------------

    def initialize_tree(self) -> tuple[ObjectId, ObjectId] | None:
        for w in self.objects:
            w.lo = w.hi = 0
            box = _occ4d_bounds(w, self.dt)
            hits = self.tree._query(box)
            if hits:
                return (w.id, hits[0])
            self.insert(w, box)
        return None

    def advance_time(self, v: WorldObject) -> None:
        advance_time(v, self.horizon)

    def resolve_collisions(self, v: WorldObject) -> WorldObject | None:
        dt = self.dt
        tree = self.tree
        hits = self.query_object(v)
        prev_hits = None
        while hits:
            self.stats.resolve_passes += 1
            if self.verify:
                self._check_resolve_pass(v, hits, prev_hits)
            prev_hits = hits
            if self.verify:
                budget = self._step_budget(v, hits)
            for yid in hits:
                y = self.by_id[yid]
                if not overlaps(tree.box_of(yid), tree.box_of(v.id)):
                    continue
                steps_y = y.hi - y.lo
                steps_v = v.hi - v.lo
                if steps_y == 0 and steps_v == 0:
                    return y
                if y.lo < v.lo:
                    y.lo = v.lo
                    self.update(y)
                elif steps_v <= steps_y:
                    y.hi = y.lo + steps_y // 2
                    self.update(y)
                else:
                    v.hi = v.lo + steps_v // 2
                    self.update(v)
            if self.verify and self._step_budget(v, hits) >= budget:
                raise InvariantViolation("resolve_collisions pass made no progress",
                                         self._dump(object=str(v.id), hits=hits))
            hits = self.query_object(v)
        return None

    def run(self) -> CollisionWitness | None:
        dt = self.dt
        if len(self.objects) < 2:
            return None
        pair = self.initialize_tree()
        if pair is not None:
            a, b = pair
            return CollisionWitness(a, b, 0.0, 0)
        self.stats.tree_size = len(self.tree)
        while True:
            v = self.smallest_max_time_object()
            if self.verify:
                self.verify_loop_invariants(v.hi)
            if v.hi >= self.horizon:
                break
            self.stats.iterations += 1
            if self.telemetry_every and self.stats.iterations % self.telemetry_every == 0:
                self._emit_telemetry(v.hi)
            before = v.lo, v.hi
            self.advance_time(v)
            if self.verify:
                self._check_advance(v, before)
            self.update(v)
            start_lo = v.lo
            u = self.resolve_collisions(v)
            if self.verify:
                self._check_resolve_result(v, u, start_lo)
            if u is not None:
                return CollisionWitness(v.id, u.id, v.lo * dt, v.lo)
        return None

    # -- verification ------------------------------------------------------

    def _dump(self, **extra) -> dict:
        state = {
            "iteration": self.stats.iterations,
            "intervals": {str(o.id): (o.lo, o.hi) for o in self.objects},
            "checked_upto": self._checked_upto,
        }
        state.update(extra)
        return state

    def verify_loop_invariants(self, t_prime: int) -> None:
        """Invariant 1: every t_min <= t' + 1 step. Invariant 2: no collision in [0, t'].

        The second check is a brute-force sweep, done incrementally and only
        for instances with at most ``VERIFY_BRUTE_LIMIT`` objects.
        """
        for z in self.objects:
            if z.lo > t_prime + 1:
                raise InvariantViolation("loop invariant 1: t_min exceeds t' + step",
                                         self._dump(object=str(z.id), t_prime=t_prime))
            last = self._last_lo.get(z.id, 0)
            if z.lo < last:
                raise InvariantViolation("t_min decreased", self._dump(object=str(z.id), previous=last))
            self._last_lo[z.id] = z.lo
        if len(self.objects) <= VERIFY_BRUTE_LIMIT and t_prime > self._checked_upto:
            for k in range(self._checked_upto + 1, t_prime + 1):
                hit = first_collision_at(self.objects, k, self.dt)
                if hit is not None:
                    i, j = hit
                    raise InvariantViolation(
                        "loop invariant 2: collision at or before t' was not reported",
                        self._dump(t_prime=t_prime, collision_step=k,
                                   pair=(str(self.objects[i].id), str(self.objects[j].id))))
            self._checked_upto = t_prime

    def _check_advance(self, v: WorldObject, before: tuple[int, int]) -> None:
        if v.lo <= before[1]:
            raise InvariantViolation("advance_time did not move t_min past the previous t_max",
                                     self._dump(object=str(v.id), before=before, after=(v.lo, v.hi)))
        if not v.lo <= v.hi <= self.horizon:
            raise InvariantViolation("advance_time produced an invalid interval",
                                     self._dump(object=str(v.id), after=(v.lo, v.hi)))

    def _step_budget(self, v: WorldObject, hits: list) -> int:
        by_id = self.by_id
        return (v.hi - v.lo) + sum(by_id[h].hi - by_id[h].lo for h in hits)

    def _check_resolve_pass(self, v: WorldObject, hits: list, prev_hits: list | None) -> None:
        if prev_hits is not None and not set(hits) <= set(prev_hits):
            raise InvariantViolation("query set grew inside resolve_collisions",
                                     self._dump(object=str(v.id), hits=hits, previous=prev_hits))

    def _check_resolve_result(self, v: WorldObject, u: WorldObject | None, start_lo: int) -> None:
        if v.lo != start_lo:
            raise InvariantViolation("resolve_collisions changed t_min of the advanced object",
                                     self._dump(object=str(v.id)))
        if u is not None:
            if not (u.lo == u.hi == v.lo == v.hi and collide_at(u, v, v.lo, self.dt)):
                raise InvariantViolation("reported pair does not collide at the reported time",
                                         self._dump(pair=(str(v.id), str(u.id))))
            return
        if len(self.objects) <= VERIFY_BRUTE_LIMIT:
            ids = list(self.tree)
            for i, a in enumerate(ids):
                for b in ids[i + 1:]:
                    if overlaps(self.tree.box_of(a), self.tree.box_of(b)):
                        raise InvariantViolation("4D boxes still overlap after resolve_collisions",
                                                 self._dump(pair=(str(a), str(b))))

    def _emit_telemetry(self, t_prime: int) -> None:
        s = self.stats
        s.max_tree_height = max(s.max_tree_height, self.tree.height)
        log.info(json.dumps({"event": "iteration", "iteration": s.iterations, "t_prime": t_prime,
                             "tree_size": len(self.tree), "tree_height": self.tree.height,
                             "queue_len": len(self._heap), "queue_pushes": s.queue_pushes,
                             "resolve_passes": s.resolve_passes}))


def detect_4d(p: ProblemInstance, verify: bool = False, stats: EngineStats | None = None,
              time_weight: float = 1.0) -> CollisionWitness | None:
    """4D AABB-tree detection with per-object variable time steps."""
    eng = FourDEngine(p, verify=verify, time_weight=time_weight)
    try:
        return eng.run()
    finally:
        eng.stats.max_tree_height = max(eng.stats.max_tree_height, eng.tree.height)
        if stats is not None:
            stats.__dict__.update(eng.stats.__dict__)
