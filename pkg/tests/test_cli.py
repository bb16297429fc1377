import json
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

from linkatlas.cli import cli, main
from linkatlas.records import RecordReader, curve_points


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    out = tmp_path_factory.mktemp("ds")
    runner = CliRunner()
    res = runner.invoke(cli, [
        "generate", "--count", "15", "--seed", "4", "--out", str(out / "ds")])
    assert res.exit_code == 0, res.output
    return out / "ds"


def test_generate_outputs(dataset):
    assert (dataset / "mechanisms.ldjson").exists()
    assert (dataset / "trajectories.ldjson").exists()
    assert (dataset / "negatives.ldjson").exists()
    assert (dataset / "rejection_stats.png").exists()
    stats = json.loads((dataset / "stats.json").read_text())
    assert stats["accepted"] >= 15
    mechs = list(RecordReader(dataset / "mechanisms.ldjson", "mechanism"))
    assert len(mechs) == 15
    assert all(8 <= m.n <= 20 for m in mechs)


def test_generate_is_byte_identical(tmp_path):
    runner = CliRunner()
    for d in ("a", "b"):
        res = runner.invoke(cli, [
            "generate", "--count", "8", "--seed", "11", "--threads", "1",
            "--out", str(tmp_path / d)])
        assert res.exit_code == 0, res.output
    for name in ("mechanisms.ldjson", "trajectories.ldjson", "negatives.ldjson", "stats.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_pipeline_to_retrieval(dataset, tmp_path):
    runner = CliRunner()
    curves = tmp_path / "curves.ldjson"
    res = runner.invoke(cli, [
        "normalize", "--trajectories", str(dataset / "trajectories.ldjson"),
        "--mechanisms", str(dataset / "mechanisms.ldjson"), "--out", str(curves)])
    assert res.exit_code == 0, res.output

    curated = tmp_path / "curated.ldjson"
    res = runner.invoke(cli, [
        "curate", "--curves", str(curves), "--out", str(curated),
        "--figure", str(tmp_path / "grid.png")])
    assert res.exit_code == 0, res.output
    assert (tmp_path / "grid.png").exists()
    assert (tmp_path / "grid_before.png").exists()
    n_curves = len(list(RecordReader(curves, "curve")))
    n_curated = len(list(RecordReader(curated, "curve")))
    assert 0 < n_curated < n_curves

    res = runner.invoke(cli, [
        "build-atlas", "--curves", str(curves),
        "--mechanisms", str(dataset / "mechanisms.ldjson"),
        "--out", str(tmp_path / "atlas")])
    assert res.exit_code == 0, res.output

    rec = next(iter(RecordReader(curves, "curve")))
    np.savetxt(tmp_path / "query.txt", curve_points(rec))
    res = runner.invoke(cli, [
        "retrieve", "--atlas", str(tmp_path / "atlas"),
        "--query", str(tmp_path / "query.txt"), "--out", str(tmp_path / "ret")])
    assert res.exit_code == 0, res.output
    report = json.loads((tmp_path / "ret" / "report.json").read_text())
    assert 1 <= len(report["hits"]) <= 3
    assert report["hits"][0]["distance"] < 0.03
    assert (tmp_path / "ret" / "overlays.png").exists()


def test_simulate_command(dataset, tmp_path):
    runner = CliRunner()
    out = tmp_path / "sim.ldjson"
    res = runner.invoke(cli, [
        "simulate", "--mechanisms", str(dataset / "mechanisms.ldjson"),
        "-T", "60", "--out", str(out)])
    assert res.exit_code == 0, res.output
    trajs = list(RecordReader(out, "trajectory"))
    assert trajs and all(t.T == 60 for t in trajs)


def test_stats_command(tmp_path):
    runner = CliRunner()
    res = runner.invoke(cli, [
        "stats", "--sizes", "8,10", "--trials", "3", "--max-attempts", "2000",
        "--out", str(tmp_path)])
    assert res.exit_code == 0, res.output
    payload = json.loads((tmp_path / "stats.json").read_text())
    assert set(payload["by_size"]) == {"8", "10"}
    assert (tmp_path / "rejection_curve.png").exists()


def test_bench_command(dataset, tmp_path):
    runner = CliRunner()
    res = runner.invoke(cli, [
        "bench", "--count", "10", "--reps", "2",
        "--mechanisms", str(dataset / "mechanisms.ldjson"),
        "--out", str(tmp_path)])
    assert res.exit_code == 0, res.output
    payload = json.loads((tmp_path / "bench.json").read_text())
    assert {"scalar", "vectorized"} <= set(payload)
    assert any(name.startswith("parallel") for name in payload)
    assert "Time Elapsed" in (tmp_path / "bench.txt").read_text()


def test_exit_codes(tmp_path):
    assert main(["no-such-command"]) == 1
    assert main(["generate", "--count", "5"]) == 1  # missing --out
    # runtime failure: unreadable query file contents
    bad = tmp_path / "bad.txt"
    bad.write_text("not a number\n")
    (tmp_path / "atlas").mkdir()
    assert main(["retrieve", "--atlas", str(tmp_path / "atlas"),
                 "--query", str(bad), "--out", str(tmp_path / "r")]) == 2
