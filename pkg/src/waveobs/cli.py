"""Command-line entry point: ``waveobs {simulate,estimate,observability,report}``.

Exit codes: 0 success, 2 configuration error, 3 dimension or numerical
error, 4 I/O error.

CSV files always carry a header and print floats with 17 significant digits:

- ``states.csv``        t, v_0..v_{n-1}, w_0..w_{n-1}
- ``measurements.csv``  t, one column per measured node index
- ``source.csv``        x, f_true, f_hat
- ``state_error.csv``   t, err_norm
- ``sweep.csv``         m, cond_W, rank_W
- ``gain.csv``          row, col, value
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys as _sys
from pathlib import Path

import numpy as np

from .analysis import measurement_sweep
from .config import ExperimentConfig, dump_config, load_config, sweep_placements
from .exceptions import ConfigError, DimensionError, RecordError
from .experiment import RunRecord, run_estimate, summarize, synthesize
from .gain_design import save_gain


EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4


def fmt(x) -> str:
    return f"{float(x):.17g}"


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)


def write_states(path, times, states, n_x):
    header = ["t"] + [f"v_{i}" for i in range(n_x)] + [f"w_{i}" for i in range(n_x)]
    write_csv(path, header, ([fmt(t)] + [fmt(x) for x in row] for t, row in zip(times, states)))


def write_measurements(path, times, measurements, nodes):
    header = ["t"] + [str(int(k)) for k in nodes]
    write_csv(path, header, ([fmt(t)] + [fmt(x) for x in row] for t, row in zip(times, measurements)))


def write_sweep(path, reports):
    write_csv(path, ["m", "cond_W", "rank_W"],
              ([str(r.m), fmt(r.cond_W), str(r.rank_W)] for r in reports))


def _prepare(args) -> tuple[ExperimentConfig, Path]:
    cfg = load_config(args.config)
    if args.scale is not None:
        cfg = cfg.with_scale(args.scale)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    out = Path(args.out or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return cfg, out


def cmd_simulate(args) -> int:
    cfg, out = _prepare(args)
    sys, run = synthesize(cfg)
    write_states(out / "states.csv", run.times, run.states, sys.n_x)
    write_measurements(out / "measurements.csv", run.times, run.measurements, sys.measured)
    (out / "config.yaml").write_text(dump_config(cfg))
    print(f"wrote {sys.grid.n_t} steps of {sys.n_state} states and {sys.count_m} measurements to {out}")
    return EXIT_OK


def cmd_estimate(args) -> int:
    cfg, out = _prepare(args)
    record = run_estimate(cfg)
    sys = record.extras["system"]
    run, traj = record.extras["run"], record.extras["trajectory"]
    write_csv(out / "source.csv", ["x", "f_true", "f_hat"],
              ([fmt(x), fmt(a), fmt(b)] for x, a, b in zip(sys.grid.nodes, run.truth_source,
                                                           traj.terminal_f_hat)))
    write_csv(out / "state_error.csv", ["t", "err_norm"],
              ([fmt(t), fmt(e)] for t, e in zip(run.times, record.state_error_norms)))
    save_gain(out / "gain.csv", record.extras["gain"].L)
    (out / "run_record.json").write_text(record.to_json())
    (out / "config.yaml").write_text(dump_config(cfg))
    text = summarize(record)
    (out / "report.txt").write_text(text)
    print(text, end="")
    return EXIT_OK


def cmd_observability(args) -> int:
    cfg, out = _prepare(args)
    grid = cfg.make_grid()
    placements = sweep_placements(cfg, grid.n_x)
    reports = measurement_sweep(grid, cfg.physical_params(), placements)
    write_sweep(out / "sweep.csv", reports)
    for r in reports:
        print(f"m={r.m:4d}  rank_W={r.rank_W:4d}  cond_W={r.cond_W:.6g}")
    return EXIT_OK


def cmd_report(args) -> int:
    path = Path(args.record)
    record = RunRecord.from_json(path.read_text())
    print(summarize(record), end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="waveobs", description=(
        "Recover the spatial source of a 1D wave equation from field measurements "
        "with an adaptive observer."))
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="experiment YAML file")
        p.add_argument("--out", help="output directory (overrides output_dir in the config)")
        p.add_argument("--seed", type=int, help="noise RNG seed override")
        p.add_argument("--scale", type=int, help="override the number of interior nodes n_x")

    common(sub.add_parser("simulate", help="write truth states and measurements"))
    common(sub.add_parser("estimate", help="run the adaptive observer and report errors"))
    common(sub.add_parser("observability", help="condition number of W across sensor placements"))
    p = sub.add_parser("report", help="summarise a run_record.json")
    p.add_argument("record")
    return parser


COMMANDS = {"simulate": cmd_simulate, "estimate": cmd_estimate,
            "observability": cmd_observability, "report": cmd_report}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, RecordError) as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return EXIT_CONFIG
    except (DimensionError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    _sys.exit(main())
