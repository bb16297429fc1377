"""Command line entry points.

Report-producing subcommands write matplotlib figures next to their
delimited record outputs.  Exit codes: 0 success, 1 usage error, 2 runtime
failure.
"""

from __future__ import annotations

import json
import logging
import sys
from pathlib import Path

import click
import numpy as np

from linkatlas import plots
from linkatlas.atlas import Atlas
from linkatlas.bench import run_bench
from linkatlas.curves import curation_keep, is_arc, is_circle, normalize
from linkatlas.generator import GenerationConfig, GenerationRun, rejection_curve
from linkatlas.mechanism import JointType
from linkatlas.records import (
    CurveRecord,
    RecordReader,
    TrajectoryRecord,
    curve_points,
    mechanism_to_record,
    record_to_mechanism,
    write_curves_npz,
    write_records,
)
from linkatlas.solver import Locking, compile_plan, simulate_batch

logger = logging.getLogger(__name__)


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Debug logging.")
def cli(verbose):
    logging.basicConfig(level=logging.DEBUG if verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")


@cli.command()
@click.option("--count", type=int, required=True, help="Mechanisms to emit.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--threads", type=int, default=1, show_default=True)
@click.option("--min-joints", type=int, default=8, show_default=True)
@click.option("--max-joints", type=int, default=20, show_default=True)
@click.option("--variants", type=int, default=5, show_default=True)
@click.option("--max-attempts", type=int, default=5000, show_default=True)
@click.option("--negative-rate", type=float, default=0.01, show_default=True)
@click.option("--out", type=click.Path(file_okay=False), required=True)
def generate(count, seed, threads, min_joints, max_joints, variants, max_attempts,
             negative_rate, out):
    """Generate a mechanism dataset: mechanism, trajectory and negative
    shards plus rejection statistics."""
    cfg = GenerationConfig(
        count=count, seed=seed, workers=threads, n_min=min_joints, n_max=max_joints,
        variants_per_topology=variants, max_attempts=max_attempts,
        negative_rate=negative_rate,
    )
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    run = GenerationRun(cfg)

    def mech_records():
        for rec in run.records():
            mech_id = rec.slot * cfg.variants_per_topology + rec.variant
            yield mech_id, rec

    mech_out, traj_out = [], []
    for mech_id, rec in mech_records():
        mech_out.append(mechanism_to_record(rec.mechanism, mech_id))
        traj_out.append(TrajectoryRecord(
            mech_id=mech_id, n=rec.mechanism.n, T=rec.trajectory.T,
            positions=rec.trajectory.positions.tolist(),
        ))
    write_records(out / "mechanisms.ldjson", "mechanism", mech_out)
    write_records(out / "trajectories.ldjson", "trajectory", traj_out)
    from linkatlas.records import NegativeRecord
    write_records(out / "negatives.ldjson", "negative", [
        NegativeRecord(mechanism=mechanism_to_record(ns.mechanism, i),
                       locking_step=ns.locking_step)
        for i, ns in enumerate(run.negatives)
    ])
    (out / "stats.json").write_text(json.dumps(run.stats.to_dict(), indent=2, allow_nan=False))
    plots.save_rejection_curve(run.stats, out / "rejection_stats.png")
    click.echo(f"wrote {len(mech_out)} mechanisms to {out} "
               f"({run.stats.simulated} candidates simulated, "
               f"{len(run.negatives)} negatives)")


@cli.command()
@click.option("--mechanisms", "mech_path", type=click.Path(exists=True), required=True)
@click.option("--t", "-T", "T", type=int, default=200, show_default=True)
@click.option("--out", type=click.Path(), required=True)
def simulate(mech_path, T, out):
    """Simulate mechanism records over a full revolution."""
    records = []
    locking = 0
    for rec in RecordReader(mech_path, "mechanism"):
        mech = record_to_mechanism(rec)
        plan = compile_plan(mech)
        result = simulate_batch(mech.positions0[None], plan, T)[0]
        if isinstance(result, Locking):
            locking += 1
            click.echo(f"mechanism {rec.id}: locking at step {result.step} "
                       f"(joint {result.joint})")
            continue
        records.append(TrajectoryRecord(
            mech_id=rec.id, n=mech.n, T=T, positions=result.positions.tolist()))
    write_records(out, "trajectory", records)
    click.echo(f"wrote {len(records)} trajectories ({locking} locking skipped)")


@cli.command("normalize")
@click.option("--trajectories", "traj_path", type=click.Path(exists=True), required=True)
@click.option("--mechanisms", "mech_path", type=click.Path(exists=True), required=True)
@click.option("--out", type=click.Path(), required=True)
@click.option("--npz/--no-npz", default=False, help="Also write a binary sidecar.")
def normalize_cmd(traj_path, mech_path, out, npz):
    """Normalize every moving joint's coupler path into curve records."""
    mechs = {rec.id: record_to_mechanism(rec) for rec in RecordReader(mech_path, "mechanism")}
    curves = []
    for rec in RecordReader(traj_path, "trajectory"):
        mech = mechs[rec.mech_id]
        traj = np.asarray(rec.positions)
        for j in range(mech.n):
            if mech.types[j] == JointType.FIXED:
                continue
            pts = normalize(traj[j])
            curves.append(CurveRecord(
                mech_id=rec.mech_id, joint_id=j,
                is_arc=is_arc(mech, j), is_circle=is_circle(pts),
                points=pts.tolist()))
    write_records(out, "curve", curves)
    if npz:
        write_curves_npz(str(out) + ".npz", curves)
    flagged = sum(1 for c in curves if c.is_arc or c.is_circle)
    click.echo(f"wrote {len(curves)} curves ({flagged} arc-or-circle flagged)")


@cli.command()
@click.option("--curves", "curves_path", type=click.Path(exists=True), required=True)
@click.option("--keep-rate", type=float, default=0.005, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(), required=True)
@click.option("--figure", type=click.Path(), default=None,
              help="Before/after sample grid image.")
def curate(curves_path, keep_rate, seed, out, figure):
    """Drop 1-keep_rate of arc-or-circle curves (deterministic per record)."""
    kept, before_sample, after_sample = [], [], []
    total = 0
    for rec in RecordReader(curves_path, "curve"):
        total += 1
        if len(before_sample) < 64:
            before_sample.append(curve_points(rec))
        flagged = bool(rec.is_arc or rec.is_circle)
        if curation_keep(rec.mech_id, rec.joint_id, flagged, keep_rate, seed):
            kept.append(rec)
            if len(after_sample) < 64:
                after_sample.append(curve_points(rec))
    write_records(out, "curve", kept)
    if figure:
        import matplotlib.pyplot as plt  # noqa: F401  (backend set in plots)
        fig_path = Path(figure)
        plots.save_curve_grid(before_sample, fig_path.with_name(fig_path.stem + "_before" + fig_path.suffix), "uncurated sample")
        plots.save_curve_grid(after_sample, fig_path, "curated sample")
    click.echo(f"kept {len(kept)} of {total} curves")


@cli.command("build-atlas")
@click.option("--curves", "curves_path", type=click.Path(exists=True), required=True)
@click.option("--mechanisms", "mech_path", type=click.Path(exists=True), required=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--resample", type=int, default=None, help="Scan resolution (points per curve).")
@click.option("--out", type=click.Path(file_okay=False), required=True)
def build_atlas_cmd(curves_path, mech_path, seed, resample, out):
    """Build and persist a retrieval atlas from curated curve records."""
    mechs = {rec.id: record_to_mechanism(rec) for rec in RecordReader(mech_path, "mechanism")}
    records = list(RecordReader(curves_path, "curve"))
    atlas = Atlas.build(records, mechs, seed=seed, resample_to=resample)
    atlas.save(out)
    click.echo(f"atlas of {len(atlas)} curves written to {out}")


def _load_query(path: Path) -> np.ndarray:
    if path.suffix == ".ldjson":
        rec = next(iter(RecordReader(path, "curve")))
        return curve_points(rec)
    text = path.read_text().strip()
    delim = "," if "," in text.splitlines()[0] else None
    return np.loadtxt(str(path), delimiter=delim)


@cli.command()
@click.option("--atlas", "atlas_path", type=click.Path(exists=True), required=True)
@click.option("--query", "query_path", type=click.Path(exists=True), required=True)
@click.option("--k", type=int, default=3, show_default=True)
@click.option("--threshold", type=float, default=0.03, show_default=True)
@click.option("--out", type=click.Path(file_okay=False), required=True)
def retrieve(atlas_path, query_path, k, threshold, out):
    """Query the atlas by shape; writes a report and overlay figures."""
    atlas = Atlas.load(atlas_path)
    query = normalize(_load_query(Path(query_path)))
    hits = atlas.retrieve(query, k=k, threshold=threshold)
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    report = {
        "query_points": query.tolist(),
        "k": k,
        "threshold": threshold,
        "hits": [
            {
                "mech_id": h.mech_id,
                "joint_id": h.joint_id,
                "distance": h.distance,
                "above_threshold": h.above_threshold,
                "curve": h.curve.tolist(),
                "mechanism": vars(mechanism_to_record(h.mechanism, h.mech_id)),
            }
            for h in hits
        ],
    }
    (out / "report.json").write_text(json.dumps(report))
    plots.save_retrieval_overlays(query, hits, out / "overlays.png")
    for h in hits:
        flag = " (above threshold)" if h.above_threshold else ""
        click.echo(f"mech {h.mech_id} joint {h.joint_id}: d={h.distance:.5f}{flag}")


@cli.command()
@click.option("--count", type=int, default=10000, show_default=True)
@click.option("--reps", type=int, default=10, show_default=True)
@click.option("--threads", type=int, default=1, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--mechanisms", "mech_path", type=click.Path(exists=True), default=None,
              help="Reuse an existing mechanism shard instead of generating one.")
@click.option("--out", type=click.Path(file_okay=False), required=True)
def bench(count, reps, threads, seed, mech_path, out):
    """Time scalar vs vectorized vs parallel solving of one workload."""
    if mech_path:
        mechs = [record_to_mechanism(r) for r in RecordReader(mech_path, "mechanism")][:count]
    else:
        cfg = GenerationConfig(count=count, seed=seed)
        run = GenerationRun(cfg)
        mechs = [rec.mechanism for rec in run.records()]
    results = run_bench(mechs, reps=reps, workers=threads)
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    lines = [f"{'Method':<24}Time Elapsed(s)"]
    for res in results.values():
        lines.append(f"{res.name:<24}{res.mean:.3f} +/- {res.std:.4f}")
    table = "\n".join(lines)
    click.echo(table)
    (out / "bench.txt").write_text(table + "\n")
    (out / "bench.json").write_text(json.dumps(
        {name: {"mean": r.mean, "std": r.std, "times": r.times} for name, r in results.items()},
        indent=2))
    plots.save_bench_chart({n: (r.mean, r.std) for n, r in results.items()}, out / "bench.png")


@cli.command()
@click.option("--sizes", default="8,10,12,14,16,18,20", show_default=True)
@click.option("--trials", type=int, default=100, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--max-attempts", type=int, default=5000, show_default=True)
@click.option("--out", type=click.Path(file_okay=False), required=True)
def stats(sizes, trials, seed, max_attempts, out):
    """Rejection-sampling difficulty by joint count (attempts per success)."""
    size_list = [int(s) for s in sizes.split(",")]
    cfg = GenerationConfig(count=1, seed=seed, max_attempts=max_attempts)
    result = rejection_curve(cfg, size_list, trials)
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "stats.json").write_text(json.dumps(result.to_dict(), indent=2))
    plots.save_rejection_curve(result, out / "rejection_curve.png")
    for n in size_list:
        click.echo(f"n={n}: mean attempts {result.mean_attempts(n):.1f}, "
                   f"rejection rate {result.rejection_rate(n):.3f}")


@cli.command()
@click.option("--port", type=int, default=8765, show_default=True, envvar="LINKATLAS_PORT")
@click.option("--host", default="127.0.0.1", show_default=True, envvar="LINKATLAS_HOST")
@click.option("--atlas", "atlas_path", type=click.Path(exists=True), default=None,
              envvar="LINKATLAS_ATLAS", help="Atlas directory for /retrieve.")
@click.option("--ui-dir", type=click.Path(exists=True), default=None,
              envvar="LINKATLAS_UI_DIR", help="Static UI bundle to serve at /ui.")
def serve(port, host, atlas_path, ui_dir):
    """Run the HTTP JSON service backing the interactive designer."""
    import uvicorn

    from linkatlas.service import create_app

    app = create_app(atlas_path=atlas_path, ui_dir=ui_dir)
    uvicorn.run(app, host=host, port=port, log_level="info")


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.exceptions.Abort:
        return 1
    except click.UsageError as exc:
        exc.show(file=sys.stderr)
        return 1
    except click.ClickException as exc:
        exc.show(file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure
        logger.error("%s", exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
