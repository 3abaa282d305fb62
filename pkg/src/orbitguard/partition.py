"""Altitude-band edge partitioning and parallel detection.

Two objects can only collide if their radial ranges (perigee to apogee,
padded by the radii) overlap; that defines the potential-collision graph.
Bands are cut at every d-th sorted semi-major axis and an object joins every
band its padded range touches, so each graph edge lands inside at least one
band and the bands can be checked independently.
"""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .engine import CollisionWitness, EngineStats, ProblemInstance, WorldObject, collide_at, detect_4d


class UncoveredEdge(RuntimeError):
    pass


@dataclass
class Band:
    index: int
    lo: float  # meters from Earth's center
    hi: float
    members: list = field(default_factory=list)


@dataclass
class PartitionSet:
    bands: list[Band]
    pad: float  # added to both ends of each object's radial range

    def __len__(self) -> int:
        return len(self.bands)

    def counts(self) -> list[int]:
        return [len(b.members) for b in self.bands]


def padded_ranges(objects: Sequence[WorldObject], horizon: float, pad: float) -> np.ndarray:
    """(n, 2) array of radial ranges widened by ``pad`` on both sides."""
    out = np.empty((len(objects), 2))
    for k, o in enumerate(objects):
        lo, hi = o.dynamics.radial_range(horizon)
        out[k] = (lo - pad, hi + pad)
    return out


def default_pad(objects: Sequence[WorldObject]) -> float:
    return 2.0 * max((o.r for o in objects), default=0.0)


def build_bands(objects: Sequence[WorldObject], p: int, horizon: float = 0.0) -> PartitionSet:
    """Split into at most ``p`` altitude bands by sorted semi-major axis."""
    if p < 1:
        raise ValueError("need at least one partition")
    n = len(objects)
    if n == 0:
        raise ValueError("no objects to partition")
    pad = default_pad(objects)
    ranges = padded_ranges(objects, horizon, pad)
    keys = sorted(o.dynamics.band_key() for o in objects)
    d = math.ceil(n / p)
    # cut midway between the (d-1)-th and d-th keys so an object sitting on a
    # cut is not duplicated merely because its own key defines the cut
    edges = [0.5 * (keys[k - 1] + keys[k]) for k in range(d, n, d)]
    lo_all, hi_all = float(ranges[:, 0].min()), float(ranges[:, 1].max())
    bounds = [lo_all] + edges + [hi_all]
    bands = [Band(j, bounds[j], bounds[j + 1]) for j in range(len(bounds) - 1)]
    starts = np.array([b.lo for b in bands])
    ends = np.array([b.hi for b in bands])
    for k, o in enumerate(objects):
        lo, hi = ranges[k]
        # closed intersection: objects on a boundary go to both sides
        for j in np.nonzero((starts <= hi) & (ends >= lo))[0]:
            bands[j].members.append(o.id)
    return PartitionSet(bands, pad)


def partition_edge_cover_check(objects: Sequence[WorldObject], parts: PartitionSet, horizon: float = 0.0) -> None:
    """Raise UncoveredEdge unless every potential-collision pair shares a band."""
    ranges = padded_ranges(objects, horizon, parts.pad)
    index = {o.id: k for k, o in enumerate(objects)}
    n = len(objects)
    nb = len(parts.bands)
    # membership bitsets, 64 bands per word
    words = max(1, (nb + 63) // 64)
    mask = np.zeros((n, words), dtype=np.uint64)
    for b in parts.bands:
        w, bit = divmod(b.index, 64)
        for m in b.members:
            mask[index[m], w] |= np.uint64(1) << np.uint64(bit)
    order = np.argsort(ranges[:, 0], kind="stable")
    lo_sorted = ranges[order, 0]
    for pos, u in enumerate(order):
        # candidates start no later than u ends; sorted by start so a prefix
        stop = np.searchsorted(lo_sorted, ranges[u, 1], side="right")
        cand = order[pos + 1:stop]
        if not len(cand):
            continue
        cand = cand[ranges[cand, 1] >= ranges[u, 0]]
        shared = (mask[cand] & mask[u]).any(axis=1)
        if not shared.all():
            v = cand[~shared][0]
            raise UncoveredEdge(f"objects {objects[u].id!r} and {objects[v].id!r} can collide but share no band")


def _sub_problem(problem: ProblemInstance, members: set) -> ProblemInstance:
    objs = [o.clone() for o in problem.objects if o.id in members]
    return ProblemInstance(objs, problem.horizon, problem.step)


def _run_band(args):
    sub, verify = args
    stats = EngineStats()
    w = detect_4d(sub, verify=verify, stats=stats)
    return w, stats


@dataclass
class PartitionedResult:
    witness: CollisionWitness | None
    per_band: list[CollisionWitness | None]
    witnesses: list[CollisionWitness]  # distinct across bands
    stats: list[EngineStats]


def default_workers() -> int:
    env = os.environ.get("ORBITGUARD_WORKERS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def detect_partitioned_full(problem: ProblemInstance, parts: PartitionSet, workers: int | None = None,
                            verify: bool = False) -> PartitionedResult:
    jobs = [(_sub_problem(problem, set(b.members)), verify) for b in parts.bands]
    workers = default_workers() if workers is None else workers
    if workers <= 1 or len(jobs) <= 1:
        results = [_run_band(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            results = list(pool.map(_run_band, jobs))
    per_band = [w for w, _ in results]
    distinct = {}
    for w in per_band:
        if w is not None:
            distinct.setdefault(w.key(), w)
    found = [distinct[k] for k in sorted(distinct)]
    by_id = {o.id: o for o in problem.objects}
    for w in found:
        if not collide_at(by_id[w.a], by_id[w.b], w.step, problem.step):
            raise AssertionError(f"band reported a pair that does not collide: {w}")
    return PartitionedResult(found[0] if found else None, per_band, found, [s for _, s in results])


def detect_partitioned(problem: ProblemInstance, parts: PartitionSet, workers: int | None = None,
                       verify: bool = False) -> CollisionWitness | None:
    """Earliest witness over independently solved bands."""
    return detect_partitioned_full(problem, parts, workers, verify).witness


def partition_stats(parts: PartitionSet) -> list[dict]:
    return [{"band_index": b.index, "alt_lo_m": b.lo, "alt_hi_m": b.hi, "count": len(b.members)}
            for b in parts.bands]


def partition_stats_csv(parts: PartitionSet) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=["band_index", "alt_lo_m", "alt_hi_m", "count"], lineterminator="\n")
    w.writeheader()
    for row in partition_stats(parts):
        w.writerow(row)
    return buf.getvalue()
