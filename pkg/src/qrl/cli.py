"""Command-line front end.

    qrl --mode <m> --config <path> [--set key=value ...] --out <dir>

Precedence, lowest first: built-in defaults, the config file, QRL_WORKERS, --set.
Every run directory gets a manifest.txt whose body parses back to the same
configuration, so ``qrl --config <dir>/manifest.txt --out <new>`` regenerates it.

Exit codes:
    0  success
    1  unexpected internal error
    2  configuration error (unknown key, bad type, invariant violation)
    3  no barrier: the pulse washes the shallow well out
    4  too few levels / degenerate eigen window
    5  no interior minimum during refinement
    6  solver breakdown
    7  file system error
"""
import argparse
import csv
import os
import sys

from .config import parse_config
from .errors import EXIT_CODES, ConfigError, QRLError
from .evolve import fmt, write_trace_csv
from .explore import SweepPlan, d_scan, run_sweep, summary, write_dscan_csv, write_manifest
from .model import find_geometry, flux
from .readout import CSV_COLUMNS, run_readout
from .spectrum import quasi_bound_states

SPECTRUM_COLUMNS = ("level", "energy", "energy_above_well", "well_weight", "marginal")
TRACE_COLUMNS = ("t_ns", "P", "Q")


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def run_single(cfg, out, traces=False):
    result = run_readout(cfg.params(), cfg.pulse(), cfg.numerics(), record_traces=traces)
    _write_csv(os.path.join(out, "results.csv"), CSV_COLUMNS, [result.csv_row()])
    with open(os.path.join(out, "record.txt"), "w") as fh:
        fh.write(result.to_record())
    extra = {"n_err": fmt(result.n_err), "fidelity": fmt(result.fidelity)}
    if traces:
        tr = result.traces
        _write_csv(os.path.join(out, "trace.csv"), TRACE_COLUMNS,
                   [(fmt(t), fmt(p), fmt(q)) for t, p, q in zip(tr.t, tr.p, tr.q)])
        write_trace_csv(os.path.join(out, "trace_0.csv"), zip(tr.t, tr.norm0, 1 - tr.q))
        write_trace_csv(os.path.join(out, "trace_1.csv"), zip(tr.t, tr.norm1, tr.p))
        extra["max_tail_mass"] = fmt(max(tr.tail))
    return extra


def run_spectrum(cfg, out):
    params, grid = cfg.params(), cfg.grid()
    phi = flux(params.a0, 0.0, 0.0)
    states = quasi_bound_states(params, cfg.n_levels, grid, phi, cfg.window_buffer)
    v1 = find_geometry(phi, params, grid.c).v1
    rows = [(i, fmt(s.energy), fmt(s.energy - v1), fmt(s.well_weight), int(s.marginal))
            for i, s in enumerate(states)]
    _write_csv(os.path.join(out, "spectrum.csv"), SPECTRUM_COLUMNS, rows)
    for row in rows:
        print(*row, sep="\t")
    return {"levels": len(states)}


def run_sweep_mode(cfg, out):
    plan = SweepPlan(cfg.sweep, cfg.with_(sweep=()), out, cfg.workers)
    result = run_sweep(plan)
    return summary(result)


def run_dscan(cfg, out):
    rows = d_scan(cfg.t_p, cfg.dscan_D, cfg, workers=cfg.workers)
    write_dscan_csv(os.path.join(out, "dscan.csv"), rows)
    ok = [r for r in rows if r.error is None]
    extra = {"points": len(rows), "failed": len(rows) - len(ok)}
    if ok:
        best = min(ok, key=lambda r: r.n_best)
        extra.update(argmin_D=fmt(best.D), min_n_err=fmt(best.n_best))
    return extra


RUNNERS = {
    "single": run_single,
    "trace": lambda cfg, out: run_single(cfg, out, traces=True),
    "spectrum": run_spectrum,
    "dscan": run_dscan,
}


def build_parser():
    p = argparse.ArgumentParser(prog="qrl", description="Phase-qubit single-pulse readout simulator.")
    p.add_argument("--mode", choices=("single", "trace", "sweep", "dscan", "spectrum"),
                   help="overrides the config's mode key")
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="override one configuration key (repeatable)")
    p.add_argument("--out", default=".", help="output directory (created if missing)")
    return p


def load_config(args, environ=None):
    environ = os.environ if environ is None else environ
    text = ""
    if args.config:
        with open(args.config) as fh:
            text = fh.read()
    overrides = []
    if environ.get("QRL_WORKERS"):
        overrides.append(f"workers={environ['QRL_WORKERS']}")
    if args.mode:
        overrides.append(f"mode={args.mode}")
    return parse_config(text, overrides + list(args.overrides))


def _category(exc):
    for name, code in EXIT_CODES.items():
        if code == exc.exit_code:
            return name
    return "error"


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
        os.makedirs(args.out, exist_ok=True)
        if cfg.mode == "sweep":
            # run_sweep writes its own manifest next to results.csv
            run_sweep_mode(cfg, args.out)
        else:
            extra = RUNNERS[cfg.mode](cfg, args.out)
            write_manifest(os.path.join(args.out, "manifest.txt"), cfg, extra)
    except ConfigError as exc:
        print(f"error[config]: {exc}", file=sys.stderr)
        return exc.exit_code
    except QRLError as exc:
        print(f"error[{_category(exc)}]: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error[io]: {exc}", file=sys.stderr)
        return EXIT_CODES["io"]
    except Exception as exc:  # noqa: BLE001 - last-resort categorisation
        print(f"error[unexpected]: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CODES["unexpected"]
    return 0


if __name__ == "__main__":
    sys.exit(main())
