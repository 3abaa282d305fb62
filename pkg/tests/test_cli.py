import csv
import json
import math
import subprocess
import sys

import pytest

from orbitguard import cli
from orbitguard.dynamics import MU_EARTH, OrbitalElements
from orbitguard.ingest import CatalogEntry, read_catalog, write_catalog

A = 7e6
STEP = 1e-3
MEET = 500


@pytest.fixture
def crossing_catalog(tmp_path):
    """Equatorial and polar circular orbits of equal radius, both reaching
    the shared node (A, 0, 0) exactly at step MEET."""
    theta = math.sqrt(MU_EARTH / A ** 3) * MEET * STEP
    path = tmp_path / "crossing.txt"
    write_catalog([CatalogEntry(1, OrbitalElements(A, 0.0, 0.0, 0.0, 0.0, -theta), 1.0),
                   CatalogEntry(2, OrbitalElements(A, 0.0, math.pi / 2, 0.0, 0.0, -theta), 1.0)], path)
    return path


@pytest.fixture
def tle_file(tmp_path):
    path = tmp_path / "synth.tle"
    assert cli.main(["synth", "--n", "200", "--seed", "5", "--out", str(path)]) == 0
    return path


def test_detect_crossing_exit_2(crossing_catalog, tmp_path, capsys):
    out = tmp_path / "report.json"
    for algo in cli.ALGORITHMS:
        code = cli.main(["detect", "--input", str(crossing_catalog), "--algo", algo, "--horizon-s", "1",
                         "--step-s", str(STEP), "--out", str(out)])
        assert code == 2
        report = json.loads(out.read_text())
        assert report["schema_version"] == cli.SCHEMA_VERSION
        assert report["witness"]["step"] == MEET
        assert report["witness"]["t"] == pytest.approx(MEET * STEP)
        assert {report["witness"]["a"], report["witness"]["b"]} == {1, 2}
    assert "collision" in capsys.readouterr().out


def test_detect_clean_exit_0(tle_file, tmp_path, capsys):
    cat = tmp_path / "cat.txt"
    assert cli.main(["gen", "--input", str(tle_file), "--n", "150", "--out", str(cat)]) == 0
    out = tmp_path / "r.json"
    code = cli.main(["detect", "--input", str(cat), "--radius-m", "0.1", "--horizon-s", "0.5", "--out", str(out)])
    assert code == 0
    assert capsys.readouterr().out.splitlines()[-1] == "none"
    report = json.loads(out.read_text())
    assert report["witness"] is None and report["n_objects"] == 150
    assert report["telemetry"]["iterations"] > 0 and report["wall_time_s"] >= 0


def test_detect_partitioned(tle_file, tmp_path):
    cat = tmp_path / "cat.txt"
    cli.main(["gen", "--input", str(tle_file), "--out", str(cat)])
    out = tmp_path / "r.json"
    code = cli.main(["detect", "--input", str(cat), "--horizon-s", "0.2", "--partitions", "3", "--workers", "1",
                     "--radius-m", "0.1", "--out", str(out)])
    assert code == 0
    assert len(json.loads(out.read_text())["telemetry"]["bands"]) == 3


def test_usage_errors_exit_1(crossing_catalog, tmp_path, capsys):
    assert cli.main(["detect", "--input", str(crossing_catalog), "--horizon-s", "1", "--step-s", "0.3"]) == 1
    assert "not a multiple" in capsys.readouterr().err
    assert cli.main(["detect", "--input", str(crossing_catalog), "--algo", "fast"]) == 1
    assert cli.main(["detect", "--input", str(tmp_path / "missing.tle")]) == 1
    assert cli.main(["detect"]) == 1
    assert cli.main(["detect", "--input", str(crossing_catalog), "--partitions", "0"]) == 1
    assert cli.main(["detect", "--input", str(crossing_catalog), "--algo", "brute", "--partitions", "2"]) == 1
    assert cli.main([]) == 1


def test_parse_error_exit_1(tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("# orbitguard catalog v1\n1 2 3\n")
    assert cli.main(["detect", "--input", str(bad)]) == 1


def test_gen_is_deterministic(tle_file, tmp_path):
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    for path in (a, b):
        assert cli.main(["gen", "--input", str(tle_file), "--n", "500", "--seed", "9", "--out", str(path)]) == 0
    assert a.read_bytes() == b.read_bytes()
    cat = read_catalog(a)
    assert len(cat) == 500 and len({e.id for e in cat}) == 500
    c = tmp_path / "c.txt"
    cli.main(["gen", "--input", str(tle_file), "--n", "500", "--seed", "10", "--out", str(c)])
    assert c.read_bytes() != a.read_bytes()


def test_gen_drops_duplicates(tmp_path):
    tle = tmp_path / "s.tle"
    cli.main(["synth", "--n", "50", "--out", str(tle)])
    out = tmp_path / "o.txt"
    cli.main(["gen", "--input", str(tle), "--out", str(out)])
    assert len(read_catalog(out)) == 48
    cli.main(["gen", "--input", str(tle), "--keep-duplicates", "--out", str(out)])
    assert len(read_catalog(out)) == 50


def test_bench_shape_and_determinism(tle_file, tmp_path):
    runs = []
    for k in range(2):
        out, plot = tmp_path / f"b{k}.csv", tmp_path / f"p{k}.csv"
        assert cli.main(["bench", "--input", str(tle_file), "--n", "20,40", "--horizon-s", "0.05",
                         "--radius-m", "0.1", "--partition-list", "1,2", "--workers", "1",
                         "--out", str(out), "--plot-out", str(plot)]) == 0
        rows = list(csv.DictReader(out.open()))
        runs.append(rows)
        assert [r["n"] for r in rows] == ["20", "40"]
        assert set(rows[0]) == {"n", "basic-aabb_p1_s", "aabb-4d_p1_s", "aabb-4d_p2_s", "basic-aabb_p1_witness",
                                "aabb-4d_p1_witness", "aabb-4d_p2_witness"}
        assert len(plot.read_text().splitlines()) == 1 + 2 * 3
    strip = [[{k: v for k, v in r.items() if not k.endswith("_s")} for r in rows] for rows in runs]
    assert strip[0] == strip[1]


def test_bench_empty_n_list(tle_file, tmp_path):
    out = tmp_path / "b.csv"
    assert cli.main(["bench", "--input", str(tle_file), "--n", "", "--out", str(out)]) == 0
    assert out.read_text() == "n,basic-aabb_p1_s,aabb-4d_p1_s,basic-aabb_p1_witness,aabb-4d_p1_witness\n"


def test_partition_stats(tle_file, tmp_path):
    out = tmp_path / "bands.csv"
    assert cli.main(["partition-stats", "--input", str(tle_file), "--sweep", "1-4", "--partitions", "4",
                     "--out", str(out)]) == 0
    sweep = list(csv.DictReader((tmp_path / "bands_sweep.csv").open()))
    assert [int(r["partitions"]) for r in sweep] == [1, 2, 3, 4]
    assert int(sweep[0]["max_count"]) == 198
    maxes = [int(r["max_count"]) for r in sweep]
    assert maxes == sorted(maxes, reverse=True)
    bands = list(csv.DictReader(out.open()))
    assert len(bands) == 4 and list(bands[0]) == ["band_index", "alt_lo_m", "alt_hi_m", "count"]


def test_worker_default_from_environment(monkeypatch):
    monkeypatch.setenv("ORBITGUARD_WORKERS", "3")
    args = cli.build_parser().parse_args(["detect", "--input", "x"])
    assert args.workers == 3


def test_console_entry_point(crossing_catalog):
    proc = subprocess.run([sys.executable, "-m", "orbitguard", "detect", "--input", str(crossing_catalog),
                           "--horizon-s", "1", "--step-s", str(STEP)], capture_output=True, text=True)
    assert proc.returncode == 2
    assert f"step={MEET}" in proc.stdout
