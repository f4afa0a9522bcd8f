from __future__ import annotations

import json
import logging
import pathlib
import sys
from collections.abc import Sequence
from typing import Any, Optional

import attrs
import click
import numpy as np
from typing_extensions import override

from .calibration import (
    DEFAULT_MR_FLOOR,
    CalibrationReport,
    calibrate,
    load_calibration_csv,
    load_params,
    save_params,
    write_calibration_csv,
)
from .errors import ValidationError
from .period import write_period_trace
from .replay import load_replay_csv, read_estimates_jsonl, replay, write_estimates_jsonl
from .simulator import (
    CapComparison,
    NoEstimatesError,
    TraceRun,
    calibration_samples,
    error_stats,
    format_comparison,
    load_experiment,
    load_layout,
    read_steps_csv,
    run_trials,
    summarize_caps,
    write_packet_log,
    write_steps_csv,
    write_summary_json,
)

EXIT_VALIDATION = 1
EXIT_RUNTIME = 2

logger = logging.getLogger("ntcwla.cli")
logger.addHandler(logging.NullHandler())


class NtcwlaGroup(click.Group):
    """Maps library errors onto exit codes: 1 for invalid input, 2 for everything else."""

    @override
    def invoke(self, ctx: click.Context) -> Any:
        try:
            return super().invoke(ctx)
        except (click.exceptions.Exit, click.exceptions.Abort, click.ClickException):
            raise
        except ValidationError as e:
            click.echo(f"error: {e}", err=True)
            ctx.exit(EXIT_VALIDATION)
        except Exception as e:
            logger.debug("Command failed", exc_info=True)
            click.echo(f"error: {e}", err=True)
            ctx.exit(EXIT_RUNTIME)


InputFile = click.Path(exists=True, dir_okay=False, path_type=pathlib.Path)
OutputFile = click.Path(dir_okay=False, writable=True, path_type=pathlib.Path)
OutputDir = click.Path(file_okay=False, writable=True, path_type=pathlib.Path)


@click.group(cls=NtcwlaGroup)
@click.option("--verbose", is_flag=True)
def ntcwla(*, verbose: bool):
    """RSSI localization with n-times trilateral centroid weighting."""

    logging.basicConfig(level=logging.DEBUG if verbose else logging.INFO)


def format_calibration(report: CalibrationReport) -> str:
    """Render the candidate sweep: fitted parameters, then measured distance and error per bin."""

    smooths = [c.smooth for c in report.candidates]
    lines = [f"{'smooth':>8} {'p1':>10} {'p2':>10}"]
    lines.extend(f"{c.smooth:>8} {c.p1:>10.4f} {c.p2:>10.4f}" for c in report.candidates)
    lines.append("")

    header = [f"{'actual':>8}"]
    header.extend(f"{'d(s=' + str(s) + ')':>10} {'err':>8}" for s in smooths)
    lines.append(" ".join(header))

    for row in report.table():
        cells = [f"{row.distance_cm:>8.1f}"]
        cells.extend(f"{m:>10.2f} {e:>8.2f}" for m, e in zip(row.measured_cm, row.errors_cm))
        lines.append(" ".join(cells))

    lines.append("")
    lines.append(
        f"selected p1={report.params.p1:.6f} (smooth={report.smooth_p1}) "
        f"p2={report.params.p2:.6f} (smooth={report.smooth_p2})"
    )

    return "\n".join(lines)


@ntcwla.command("calibrate")
@click.argument("csv_path", type=InputFile)
@click.option("--mr-floor", type=float, default=DEFAULT_MR_FLOOR, show_default=True)
@click.option(
    "-o", "--out", type=OutputFile, default=pathlib.Path("params.json"), show_default=True
)
def calibrate_command(*, csv_path: pathlib.Path, mr_floor: float, out: pathlib.Path):
    """Fit the empirical path-loss formula to a distance,RSSI file."""

    report = calibrate(load_calibration_csv(csv_path, mr_floor))
    save_params(out, report)

    click.echo(format_calibration(report))
    logger.info(f"Wrote {out}")


@ntcwla.command("synthesize")
@click.argument("config")
@click.argument("out", type=OutputFile)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--packets-per-distance", type=int, default=60, show_default=True)
@click.option("--beacons", type=int, default=4, show_default=True)
@click.option("--set", "overrides", multiple=True, metavar="KEY=VALUE")
def synthesize_command(
    *,
    config: str,
    out: pathlib.Path,
    seed: int,
    packets_per_distance: int,
    beacons: int,
    overrides: Sequence[str],
):
    """Write a synthetic calibration file drawn from a document's channel."""

    layout = load_layout(config, overrides)
    samples = calibration_samples(
        layout.channel,
        np.random.default_rng(seed),
        packets_per_distance=packets_per_distance,
        beacons=beacons,
    )
    write_calibration_csv(out, samples)

    logger.info(f"Wrote {len(samples)} samples to {out}")


def run_stem(run: TraceRun) -> str:
    cfg = run.config
    cap = "all" if cfg.reliable_cap is None else cfg.reliable_cap

    return f"rpn{cfg.pipeline.rpn}_n{cap}_seed{cfg.rng_seed}"


@ntcwla.command("simulate")
@click.argument("config")
@click.argument("out_dir", type=OutputDir)
@click.option("--seed", type=int, default=None, help="Base seed, overriding rng_seed")
@click.option("--set", "overrides", multiple=True, metavar="KEY=VALUE")
@click.option("--packets", is_flag=True, help="Also write the packet log of every run")
@click.option("--workers", type=int, default=1, show_default=True)
def simulate_command(
    *,
    config: str,
    out_dir: pathlib.Path,
    seed: Optional[int],
    overrides: Sequence[str],
    packets: bool,
    workers: int,
):
    """Run a simulation document, or a bundled one by name.

    The bundled documents are experiment1, experiment2 and rpn_sweep.
    """

    experiment = load_experiment(config, overrides)

    if seed is not None:
        experiment = attrs.evolve(experiment, config=attrs.evolve(experiment.config, rng_seed=seed))

    out_dir.mkdir(parents=True, exist_ok=True)
    runs = run_trials(experiment.runs(), workers, log_packets=packets)
    entries = []

    for run in runs:
        stem = run_stem(run)
        write_steps_csv(out_dir / f"{stem}_steps.csv", run.records)
        write_period_trace(out_dir / f"{stem}_periods.csv", run.checks)

        if run.packets is not None:
            write_packet_log(out_dir / f"{stem}_packets.csv", run.packets)

        summary = run.summary
        entries.append(
            {
                "rpn": run.config.pipeline.rpn,
                "n_cap": run.config.reliable_cap,
                "seed": run.config.rng_seed,
                "steps_csv": f"{stem}_steps.csv",
                "summary": None if summary is None else summary.to_json(),
            }
        )

    comparison = summarize_caps(runs)
    write_summary_json(
        out_dir / "summary.json",
        {"runs": entries, "comparison": [row.to_json() for row in comparison]},
    )

    click.echo(format_comparison(comparison))


@ntcwla.command("replay")
@click.argument("packet_csv", type=InputFile)
@click.argument("params_json", type=InputFile)
@click.argument("config")
@click.option("-o", "--out", type=OutputFile, default=None, help="Output file, default stdout")
@click.option("--set", "overrides", multiple=True, metavar="KEY=VALUE")
def replay_command(
    *,
    packet_csv: pathlib.Path,
    params_json: pathlib.Path,
    config: str,
    out: Optional[pathlib.Path],
    overrides: Sequence[str],
):
    """Localize every period of a recorded packet file."""

    layout = load_layout(config, overrides)
    estimates = list(
        replay(
            load_replay_csv(packet_csv),
            layout.beacon_positions(),
            load_params(params_json),
            layout.area,
            pipeline=layout.pipeline,
            localizer=layout.localizer,
            period=layout.period,
            n_cap=layout.n_cap,
        )
    )

    if out is None:
        write_estimates_jsonl(sys.stdout, estimates)
    else:
        with out.open("w", encoding="utf-8") as file:
            write_estimates_jsonl(file, estimates)

    skipped = sum(e.estimate is None for e in estimates)
    logger.info(f"Replayed {len(estimates)} periods, {skipped} skipped")


def _report_steps(path: pathlib.Path) -> str:
    records = read_steps_csv(path)

    try:
        s = error_stats(records)
    except NoEstimatesError:
        return f"{path}: {len(records)} steps, all skipped"

    return (
        f"{path}: steps={s.steps} skipped={s.skipped} mean={s.mean_cm:.3f} cm "
        f"rmse={s.rmse_cm:.3f} cm max={s.max_cm:.3f} cm"
    )


def _report_estimates(path: pathlib.Path) -> str:
    estimates = read_estimates_jsonl(path)
    located = [e for e in estimates if e.estimate is not None]
    mean_ann = sum(e.ann for e in estimates) / len(estimates) if estimates else 0.0

    return (
        f"{path}: periods={len(estimates)} estimated={len(located)} "
        f"skipped={len(estimates) - len(located)} mean_ann={mean_ann:.2f}"
    )


def _report_summary(path: pathlib.Path) -> str:
    try:
        with path.open(encoding="utf-8") as file:
            document = json.load(file)

        rows = [CapComparison.from_json(row) for row in document["comparison"]]
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
        raise ValidationError(f"{path}: not a simulation summary ({e})") from None

    return f"{path}:\n{format_comparison(rows)}"


@ntcwla.command("report")
@click.argument("paths", type=InputFile, nargs=-1, required=True)
def report_command(*, paths: Sequence[pathlib.Path]):
    """Print statistics of step CSV, replay JSON lines and summary JSON files."""

    for path in paths:
        if path.suffix == ".csv":
            click.echo(_report_steps(path))
        elif path.suffix == ".jsonl":
            click.echo(_report_estimates(path))
        elif path.suffix == ".json":
            click.echo(_report_summary(path))
        else:
            raise ValidationError(f"{path}: unsupported file type {path.suffix or '(none)'}")


if __name__ == "__main__":
    ntcwla()
