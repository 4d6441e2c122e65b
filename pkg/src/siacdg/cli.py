"""Command line harness: ``siacdg {run,convergence,filter-inspect,fv-reference} <cfg>``."""

from __future__ import annotations

import argparse
import csv
import math
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, ExperimentConfig, load_config, serialize_config
from .experiments import convergence_study, filter_inspect, fv_run, run

TIMESERIES_HEADER = ("t", "mass", "energy", "correction_ratio", "blend_weight", "gamma", "phi_diss")
CONVERGENCE_HEADER = ("mode", "p", "N", "L2", "Linf", "order_L2", "order_Linf")

EXIT_OK, EXIT_CONFIG, EXIT_CRASH = 0, 2, 3


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _fmt(x) -> str:
    return repr(float(x)) if isinstance(x, (float, np.floating)) else str(x)


def solution_filename(t: float) -> str:
    return f"solution_{t:.6f}.csv"


def write_solution(path: Path, layout, u):
    X = layout.coordinates
    if layout.dim == 1:
        _write_csv(path, ("x", "u"), ((_fmt(x), _fmt(v)) for x, v in zip(X, u)))
    else:
        _write_csv(path, ("x", "y", "u"), ((_fmt(x), _fmt(y), _fmt(v)) for (x, y), v in zip(X, u)))


def write_triples(path: Path, K):
    i, j, v = K.triples()
    _write_csv(path, ("i", "j", "value"), ((a, b, _fmt(c)) for a, b, c in zip(i, j, v)))


def cmd_run(cfg: ExperimentConfig, out: Path, log) -> int:
    semi, res = run(cfg)
    rows = ([_fmt(row[k]) for k in TIMESERIES_HEADER] for row in res.timeseries)
    _write_csv(out / "timeseries.csv", TIMESERIES_HEADER, rows)
    for t, u in sorted(res.snapshots.items()):
        write_solution(out / solution_filename(t), semi.layout, u)
    if res.crashed:
        print(f"error: solver crashed; last stable time t={res.crash_time!r} "
              f"(t*pi={res.crash_time * math.pi:.6f}): {res.crash_reason}", file=sys.stderr)
        return EXIT_CRASH
    m = [row["mass"] for row in res.timeseries]
    log(f"reached t={res.t:.6g} in {res.steps} steps; mass drift {abs(m[-1] - m[0]):.3e}")
    return EXIT_OK


def cmd_convergence(cfg: ExperimentConfig, out: Path, log) -> int:
    def progress(mode, p, N, row):
        log(f"{mode:>6s} p={p} N={N:<4d} L2={row.L2:.4e} Linf={row.Linf:.4e}")

    table = convergence_study(cfg, progress)
    rows = ((r.mode, r.p, r.N, _fmt(r.L2), _fmt(r.Linf), _fmt(r.order_L2), _fmt(r.order_Linf))
            for r in table.rows)
    _write_csv(out / "convergence.csv", CONVERGENCE_HEADER, rows)
    for (mode, p), group in table.groups().items():
        log(f"{mode:>6s} p={p} L2 orders: " + " ".join(f"{r.order_L2:.4f}" for r in group[1:]))
    return EXIT_OK


def cmd_filter_inspect(cfg: ExperimentConfig, out: Path, log) -> int:
    res = filter_inspect(cfg)
    write_triples(out / "filter.csv", res.K)
    write_triples(out / "filter_corr.csv", res.K_corr)
    _write_csv(out / "fourier.csv", ("k", "response"),
               ((_fmt(k), _fmt(v)) for k, v in zip(res.k, res.response)))
    log(f"filter {res.K.shape[0]}x{res.K.shape[1]}, {res.K.matrix.nnz} stored nonzeros")
    return EXIT_OK


def cmd_fv_reference(cfg: ExperimentConfig, out: Path, log) -> int:
    res = fv_run(cfg)
    _write_csv(out / "fv_solution.csv", ("x", "u"), ((_fmt(x), _fmt(v)) for x, v in zip(res.x, res.u)))
    _write_csv(out / "fv_timeseries.csv", ("t", "mass", "energy"),
               ((_fmt(t), _fmt(m), _fmt(e)) for t, m, e in zip(res.times, res.mass, res.energy)))
    log(f"finite volumes: {cfg.fv_cells} cells to t={res.t:.6g}")
    return EXIT_OK


COMMANDS = {
    "run": cmd_run,
    "convergence": cmd_convergence,
    "filter-inspect": cmd_filter_inspect,
    "fv-reference": cmd_fv_reference,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="siacdg", description="Entropy-corrected DGSEM experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("config", help="experiment config file")
        p.add_argument("--out", default=None, help="output directory (overrides output.dir)")
        p.add_argument("--seed", type=int, default=None, help="seed for randomized inputs")
        p.add_argument("--quiet", action="store_true", help="suppress progress output")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.seed is not None:
        np.random.seed(args.seed)
    out = Path(args.out if args.out is not None else cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.txt").write_text(serialize_config(cfg))

    def log(msg):
        if not args.quiet:
            print(msg)

    try:
        return COMMANDS[args.command](cfg, out, log)
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
