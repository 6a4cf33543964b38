"""Command line front end: ``vp1d run|compare|diagnose``.

Exit codes: 0 success, 1 oracle comparison outside tolerance,
2 configuration error, 3 support escape, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import pic
from .config import ConfigError, RunConfig, load_config
from .diagnostics import record
from .field import compute_field, compute_moments
from .integrator import SupportEscapeError, step
from .phase_space import ConfigurationError, ParameterError
from .simulation import COLUMNS, NumericalError, make_row, plan_steps, simulate
from .snapshot import SnapshotError, read_snapshot, write_snapshot

EXIT_OK = 0
EXIT_MISMATCH = 1
EXIT_CONFIG = 2
EXIT_ESCAPE = 3
EXIT_NUMERIC = 4

log = logging.getLogger("vp1d")


def format_value(x: float) -> str:
    # repr round-trips exactly; keeps the file bitwise reproducible
    return repr(float(x))


class CsvSeries:
    def __init__(self, path: Path):
        self.fh = open(path, "w", newline="")
        self.writer = csv.writer(self.fh)
        self.writer.writerow(COLUMNS)

    def __call__(self, row: dict) -> None:
        self.writer.writerow([format_value(row[c]) for c in COLUMNS])

    def close(self):
        self.fh.close()


def run(cfg: RunConfig) -> int:
    out = cfg.resolved_output_dir()
    out.mkdir(parents=True, exist_ok=True)
    state = cfg.initial_state()
    params = cfg.step_params(state)
    n_steps, dt = plan_steps(cfg.t_final, params.dt)
    log.info("run: %d steps of dt=%.6g to t=%g, output in %s", n_steps, dt, cfg.t_final, out)

    def observer(k, st, rec, ledger):
        every = cfg.snapshot_every
        if every and (k % every == 0 or k == n_steps):
            write_snapshot(out / f"snapshot_{k:06d}.bin", st)

    series = CsvSeries(out / "timeseries.csv")
    try:
        simulate(state, params, cfg.t_final, R=cfg.radius, cadence=cfg.cadence, observer=observer, on_row=series)
    finally:
        series.close()
    return EXIT_OK


def compare(cfg: RunConfig) -> dict:
    """Run the grid solver and the particle oracle side by side.

    Returns the sup-over-time relative differences; each is normalised by
    the sup over time of the grid quantity (L1 norm for densities,
    max norm for the field).
    """
    if cfg.oracle is None:
        raise ConfigError("compare needs an [oracle] section", "oracle")
    oc = cfg.oracle
    state = cfg.initial_state()
    grid = state.grid
    params = cfg.step_params(state)
    n_steps, dt = plan_steps(oc.t_final, params.dt)
    params = type(params)(dt, params.interpolation, params.support_tol)
    ens = pic.sample(state, oc.n, cfg.seed)

    diff = {"F": 0.0, "G": 0.0, "E": 0.0, "Q": 0.0}
    scale = {"F": 0.0, "G": 0.0, "E": 0.0, "Q": 0.0}
    for k in range(n_steps + 1):
        if k % cfg.cadence == 0 or k == n_steps:
            m = compute_moments(state)
            E = compute_field(state, m).E
            Q = record(state, cfg.radius, m).Q
            Qp, Fp, Gp, Ep = pic.binned_Q(ens, grid)
            pairs = {
                "F": (np.abs(Fp - m.F).sum() * grid.dx, np.abs(m.F).sum() * grid.dx),
                "G": (np.abs(Gp - m.G).sum() * grid.dx, np.abs(m.G).sum() * grid.dx),
                "E": (np.abs(Ep - E).max(), np.abs(E).max()),
                "Q": (abs(Qp - Q), Q),
            }
            for key, (d, s) in pairs.items():
                diff[key] = max(diff[key], float(d))
                scale[key] = max(scale[key], float(s))
        if k < n_steps:
            state = step(state, params)
            ens = pic.pic_step(ens, dt)
    return {
        key: (diff[key] / scale[key] if scale[key] > 0 else diff[key]) for key in diff
    }


def diagnose(path) -> dict:
    return make_row(record(read_snapshot(path)))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vp1d", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="run a simulation and write timeseries.csv")
    p.add_argument("config")
    p = sub.add_parser("compare", help="cross-check the grid solver against the particle oracle")
    p.add_argument("config")
    p = sub.add_parser("diagnose", help="print the diagnostics of a snapshot file")
    p.add_argument("snapshot")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        if args.command == "diagnose":
            row = diagnose(args.snapshot)
            w = csv.writer(sys.stdout)
            w.writerow(COLUMNS)
            w.writerow([format_value(row[c]) for c in COLUMNS])
            return EXIT_OK
        cfg = load_config(args.config)
        if args.command == "run":
            return run(cfg)
        report = compare(cfg)
        out = cfg.resolved_output_dir()
        out.mkdir(parents=True, exist_ok=True)
        tol = cfg.oracle.tolerance
        report_doc = {"tolerance": tol, "relative_difference": report}
        (out / "compare.json").write_text(json.dumps(report_doc, indent=2) + "\n")
        bad = [k for k, v in report.items() if not v <= tol]
        for key, value in report.items():
            print(f"{key}: {value:.4g} ({'ok' if value <= tol else 'FAIL'})")
        return EXIT_MISMATCH if bad else EXIT_OK
    except (ConfigError, ConfigurationError, ParameterError, SnapshotError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SupportEscapeError as exc:
        print(f"support escape: {exc}", file=sys.stderr)
        return EXIT_ESCAPE
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
