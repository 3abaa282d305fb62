"""Command-line front end.

Exit status for ``detect``: 0 when no collision is found, 2 when a witness is
found, 1 on any error (including bad arguments).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .dynamics import KeplerDynamics
from .engine import (CollisionWitness, EngineStats, ProblemInstance, WorldObject, detect_4d, detect_basic_aabb,
                     detect_brute)
from .ingest import CatalogEntry, EmptySource, TleError, dedupe, load_catalog, scale_catalog, write_catalog
from .partition import (build_bands, default_workers, detect_partitioned_full, partition_edge_cover_check,
                        partition_stats_csv)

SCHEMA_VERSION = 1
ALGORITHMS = ("brute", "basic-aabb", "aabb-4d")
DEFAULT_RADIUS_M = 1.0

log = logging.getLogger("orbitguard")

EXIT_NONE, EXIT_ERROR, EXIT_WITNESS = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse would exit 2, which means "witness found"
        self.print_usage(sys.stderr)
        raise UsageError(message)


@dataclass
class RunConfig:
    command: str
    input: str | None = None
    algo: str = "aabb-4d"
    horizon_s: float = 10.0
    step_s: float = 1e-3
    radius_m: float | None = None
    partitions: int = 1
    workers: int | None = None
    seed: int = 0
    n: list[int] = field(default_factory=list)
    verify: bool = False
    out: str | None = None

    def validate(self) -> None:
        if self.algo not in ALGORITHMS:
            raise UsageError(f"unknown algorithm {self.algo!r}")
        if self.partitions < 1:
            raise UsageError("--partitions must be >= 1")
        if not (self.step_s > 0 and self.horizon_s >= self.step_s):
            raise UsageError("need 0 < --step-s <= --horizon-s")
        ratio = self.horizon_s / self.step_s
        if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
            raise UsageError(f"--horizon-s {self.horizon_s} is not a multiple of --step-s {self.step_s}")
        if self.radius_m is not None and self.radius_m < 0:
            raise UsageError("--radius-m must be >= 0")


def _int_list(text: str) -> list[int]:
    if not text.strip():
        return []
    out = []
    for part in text.split(","):
        if "-" in part:
            a, b = part.split("-")
            out.extend(range(int(a), int(b) + 1))
        else:
            out.append(int(part))
    return out


def _objects(entries: Sequence[CatalogEntry], radius: float | None) -> list[WorldObject]:
    return [WorldObject(e.id, KeplerDynamics(e.elements), e.r if radius is None and e.r > 0 else
                        (DEFAULT_RADIUS_M if radius is None else radius)) for e in entries]


def _load(cfg: RunConfig, drop_duplicates: bool = False) -> list[CatalogEntry]:
    if not cfg.input:
        raise UsageError("--input is required")
    entries = load_catalog(cfg.input)
    if drop_duplicates:
        entries, removed = dedupe(entries)
        for e in removed:
            log.info("dropped duplicate element set: id=%s", e.id)
    return entries


def _witness_dict(w: CollisionWitness | None) -> dict | None:
    if w is None:
        return None
    return {"a": w.a, "b": w.b, "t": w.t, "step": w.step}


def run_detection(objects: list[WorldObject], cfg: RunConfig) -> tuple[CollisionWitness | None, dict]:
    """Run the configured detector; returns the witness and a telemetry dict."""
    problem = ProblemInstance(objects, cfg.horizon_s, cfg.step_s)
    telemetry: dict = {}
    start = time.perf_counter()
    if cfg.algo == "brute":
        w = detect_brute(problem)
    elif cfg.algo == "basic-aabb":
        w = detect_basic_aabb(problem)
    elif cfg.partitions > 1:
        parts = build_bands(objects, cfg.partitions, cfg.horizon_s)
        partition_edge_cover_check(objects, parts, cfg.horizon_s)
        res = detect_partitioned_full(problem, parts, cfg.workers, cfg.verify)
        w = res.witness
        telemetry["bands"] = [{"count": c, **s.as_dict()} for c, s in zip(parts.counts(), res.stats)]
        telemetry["iterations"] = sum(s.iterations for s in res.stats)
    else:
        stats = EngineStats()
        w = detect_4d(problem, verify=cfg.verify, stats=stats)
        telemetry.update(stats.as_dict())
    telemetry["wall_time_s"] = time.perf_counter() - start
    return w, telemetry


def cmd_detect(cfg: RunConfig) -> int:
    if cfg.partitions > 1 and cfg.algo != "aabb-4d":
        raise UsageError("--partitions > 1 is only supported with --algo aabb-4d")
    objects = _objects(_load(cfg), cfg.radius_m)
    w, telemetry = run_detection(objects, cfg)
    report = {
        "schema_version": SCHEMA_VERSION,
        "command": "detect",
        "algorithm": cfg.algo,
        "n_objects": len(objects),
        "horizon_s": cfg.horizon_s,
        "step_s": cfg.step_s,
        "partitions": cfg.partitions,
        "witness": _witness_dict(w),
        "wall_time_s": telemetry.pop("wall_time_s"),
        "telemetry": telemetry,
    }
    if w is None:
        print("none")
    else:
        print(f"collision {w.a} {w.b} t={w.t!r} step={w.step}")
    if cfg.out:
        Path(cfg.out).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    return EXIT_NONE if w is None else EXIT_WITNESS


def bench_rows(entries: Sequence[CatalogEntry], cfg: RunConfig, algos: Sequence[str],
               partitions: Sequence[int]) -> tuple[list[str], list[dict]]:
    configs = [(a, p) for a in algos for p in (partitions if a == "aabb-4d" else [1])]
    columns = [f"{a}_p{p}_s" for a, p in configs]
    rows = []
    for n in cfg.n:
        sample = scale_catalog(entries, n, cfg.seed)
        row: dict = {"n": n}
        for (a, p), col in zip(configs, columns):
            run_cfg = RunConfig("detect", algo=a, horizon_s=cfg.horizon_s, step_s=cfg.step_s, partitions=p,
                                workers=cfg.workers, radius_m=cfg.radius_m)
            w, telemetry = run_detection(_objects(sample, cfg.radius_m), run_cfg)
            row[col] = telemetry["wall_time_s"]
            row[f"{a}_p{p}_witness"] = "none" if w is None else f"{w.a}:{w.b}@{w.step}"
            log.info("bench n=%d %s p=%d: %.3fs", n, a, p, telemetry["wall_time_s"])
        rows.append(row)
    return ["n"] + columns + [f"{a}_p{p}_witness" for a, p in configs], rows


def cmd_bench(cfg: RunConfig, algos: Sequence[str], partitions: Sequence[int], plot_out: str | None) -> int:
    for a in algos:
        if a not in ALGORITHMS:
            raise UsageError(f"unknown algorithm {a!r}")
    entries = _load(cfg, drop_duplicates=True) if cfg.n else []
    header, rows = bench_rows(entries, cfg, algos, partitions)
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=header, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    _emit(buf.getvalue(), cfg.out)
    if plot_out:
        pbuf = io.StringIO()
        pw = csv.writer(pbuf, lineterminator="\n")
        pw.writerow(["config", "n", "log10_n", "log10_seconds"])
        for row in rows:
            for col in header:
                if col.endswith("_s") and row[col] > 0:
                    pw.writerow([col[:-2], row["n"], math.log10(row["n"]), math.log10(row[col])])
        Path(plot_out).write_text(pbuf.getvalue())
    return 0


def cmd_gen(cfg: RunConfig, keep_duplicates: bool) -> int:
    entries = _load(cfg, drop_duplicates=not keep_duplicates)
    target = cfg.n[0] if cfg.n else len(entries)
    out = scale_catalog(entries, target, cfg.seed)
    if cfg.radius_m is not None:
        for e in out:
            e.r = cfg.radius_m
    if not cfg.out:
        raise UsageError("--out is required")
    write_catalog(out, cfg.out)
    print(f"wrote {len(out)} objects to {cfg.out}")
    return 0


def cmd_partition_stats(cfg: RunConfig, sweep: Sequence[int]) -> int:
    objects = _objects(_load(cfg, drop_duplicates=True), cfg.radius_m)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["partitions", "max_count", "total_count"])
    for p in sweep:
        counts = build_bands(objects, p, cfg.horizon_s).counts()
        w.writerow([p, max(counts), sum(counts)])
    sweep_csv = buf.getvalue()
    bands_csv = partition_stats_csv(build_bands(objects, cfg.partitions, cfg.horizon_s))
    if cfg.out:
        base = Path(cfg.out)
        base.with_name(base.stem + "_sweep.csv").write_text(sweep_csv)
        base.write_text(bands_csv)
    else:
        sys.stdout.write(sweep_csv + "\n" + bands_csv)
    return 0


def cmd_synth(n: int, seed: int, out: str | None) -> int:
    from .synth import synth_tle_text
    _emit(synth_tle_text(n, seed), out)
    return 0


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def build_parser() -> argparse.ArgumentParser:
    env_workers = default_workers()
    common = _Parser(add_help=False)
    common.add_argument("--input", help="TLE text or canonical catalog file")
    common.add_argument("--horizon-s", type=float, default=10.0, help="time bound T in seconds")
    common.add_argument("--step-s", type=float, default=1e-3, help="time step in seconds")
    common.add_argument("--radius-m", type=float, default=None,
                        help=f"box half-edge for every object (default: catalog value or {DEFAULT_RADIUS_M})")
    common.add_argument("--partitions", type=int, default=1)
    common.add_argument("--workers", type=int, default=env_workers,
                        help="worker processes for partitioned runs (env ORBITGUARD_WORKERS)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out")

    parser = _Parser(prog="orbitguard", description="Broad-phase orbital collision prediction.")
    parser.add_argument("--log-level", default="WARNING")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("detect", parents=[common], help="search for the first collision")
    p.add_argument("--algo", choices=ALGORITHMS, default="aabb-4d")
    p.add_argument("--verify", action="store_true", help="assert loop invariants at every iteration")

    p = sub.add_parser("bench", parents=[common], help="time detectors over a list of catalog sizes")
    p.add_argument("--n", default="", help="comma-separated object counts")
    p.add_argument("--algos", default="basic-aabb,aabb-4d")
    p.add_argument("--partition-list", default=None,
                   help="comma-separated partition counts for aabb-4d (default: --partitions)")
    p.add_argument("--plot-out", help="log-log plot data CSV")

    p = sub.add_parser("gen", parents=[common], help="write a canonical catalog of exactly --n objects")
    p.add_argument("--n", default="")
    p.add_argument("--keep-duplicates", action="store_true")

    p = sub.add_parser("partition-stats", parents=[common], help="band sizes over a partition sweep")
    p.add_argument("--sweep", default="1-16")

    p = sub.add_parser("synth", help="write a synthetic TLE catalog")
    p.add_argument("--n", type=int, default=16840)
    p.add_argument("--seed", type=int, default=2018)
    p.add_argument("--out")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"orbitguard: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "synth":
            return cmd_synth(args.n, args.seed, args.out)
        n_list = _int_list(args.n) if hasattr(args, "n") and isinstance(args.n, str) else []
        cfg = RunConfig(command=args.command, input=args.input, algo=getattr(args, "algo", "aabb-4d"),
                        horizon_s=args.horizon_s, step_s=args.step_s, radius_m=args.radius_m,
                        partitions=args.partitions, workers=args.workers, seed=args.seed, n=n_list,
                        verify=getattr(args, "verify", False), out=args.out)
        cfg.validate()
        if args.command == "detect":
            return cmd_detect(cfg)
        if args.command == "bench":
            plist = _int_list(args.partition_list) if args.partition_list else [cfg.partitions]
            return cmd_bench(cfg, [a.strip() for a in args.algos.split(",") if a.strip()], plist, args.plot_out)
        if args.command == "gen":
            return cmd_gen(cfg, args.keep_duplicates)
        if args.command == "partition-stats":
            return cmd_partition_stats(cfg, _int_list(args.sweep))
    except (UsageError, TleError, EmptySource, OSError, ValueError) as exc:
        print(f"orbitguard: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_ERROR



def main_exit() -> None:
    sys.exit(main())
