"""Parameter sweeps, golden-section refinement and the well-depth (D) scan."""
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
import csv
import datetime as _dt
import itertools
import math
import os

import numpy as np

from . import __version__
from .config import SWEEP_AXES, RunConfig, apply_point
from .errors import NoInteriorMinimum, QRLError
from .evolve import fmt
from .model import flux
from .readout import CSV_COLUMNS, run_readout
from .spectrum import count_levels

GOLDEN = (math.sqrt(5) - 1) / 2
DEFAULT_TOL = {"t_p": 0.05, "A": 5e-4}


@dataclass(frozen=True)
class SweepPlan:
    axes: tuple
    base: RunConfig = field(default_factory=RunConfig)
    output: str = None
    workers: int = 1

    def __post_init__(self):
        axes = tuple((name, tuple(values)) for name, values in self.axes)
        object.__setattr__(self, "axes", axes)
        if not axes:
            raise ValueError("a sweep needs at least one axis")
        names = [a for a, _ in axes]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate sweep axes in {names}")
        for name, values in axes:
            if name not in SWEEP_AXES:
                raise ValueError(f"unknown sweep axis {name!r}")
            if not values:
                raise ValueError(f"sweep axis {name!r} is empty")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")

    def points(self):
        names = [a for a, _ in self.axes]
        return [dict(zip(names, combo)) for combo in itertools.product(*(v for _, v in self.axes))]

    def manifest_config(self):
        return self.base.with_(mode="sweep", sweep=self.axes, workers=self.workers)


@dataclass(frozen=True)
class SweepRow:
    point: dict
    result: object = None
    error: str = None


@dataclass(frozen=True)
class SweepResult:
    plan: SweepPlan
    rows: list

    @property
    def ok_rows(self):
        return [r for r in self.rows if r.result is not None]

    def argmin(self):
        ok = self.ok_rows
        if not ok:
            return None
        return min(ok, key=lambda r: r.result.n_err)

    @property
    def min_n(self):
        best = self.argmin()
        return best.result.n_err if best else math.nan


def evaluate_point(base, point):
    """One readout at ``base`` with axis values substituted; errors come back tagged."""
    try:
        cfg = apply_point(base, point)
        return SweepRow(point, run_readout(cfg.params(), cfg.pulse(), cfg.numerics()))
    except (QRLError, ValueError) as exc:
        return SweepRow(point, error=f"{type(exc).__name__}: {exc}")


def _evaluate_args(args):
    return evaluate_point(*args)


def map_points(base, points, workers=1):
    """Evaluate points, preserving input order whatever the worker count."""
    tasks = [(base, p) for p in points]
    if workers <= 1 or len(tasks) <= 1:
        return [_evaluate_args(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
        return list(pool.map(_evaluate_args, tasks))


def run_sweep(plan):
    rows = map_points(plan.base, plan.points(), plan.workers)
    result = SweepResult(plan, rows)
    if plan.output:
        os.makedirs(plan.output, exist_ok=True)
        write_sweep_csv(os.path.join(plan.output, "results.csv"), result)
        write_manifest(os.path.join(plan.output, "manifest.txt"), plan.manifest_config(), summary(result))
    return result


def sweep_header(axes):
    return [f"axis_{a}" for a, _ in axes] + list(CSV_COLUMNS) + ["error"]


def write_sweep_csv(path, result):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(sweep_header(result.plan.axes))
        for row in result.rows:
            axis_vals = [_cell(row.point[a]) for a, _ in result.plan.axes]
            if row.result is not None:
                w.writerow(axis_vals + row.result.csv_row() + [""])
            else:
                w.writerow(axis_vals + [""] * len(CSV_COLUMNS) + [row.error])


def _cell(value):
    return fmt(value) if isinstance(value, float) else str(value)


def summary(result):
    best = result.argmin()
    failed = sum(r.error is not None for r in result.rows)
    out = {"points": len(result.rows), "failed": failed}
    if best is not None:
        out["argmin"] = ", ".join(f"{k}={_cell(v)}" for k, v in best.point.items())
        out["min_n_err"] = fmt(best.result.n_err)
    return out


def write_manifest(path, config, extra=None):
    """Effective config (parseable) preceded by commented provenance lines."""
    stamp = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    lines = [f"# qrl {__version__}", f"# written {stamp}"]
    for key, value in (extra or {}).items():
        lines.append(f"# {key}: {value}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n" + config.to_text())


@dataclass(frozen=True)
class RefineResult:
    argmin: float
    min_value: float
    evaluations: int
    history: tuple


def golden_section(fn, lo, hi, tol, max_evals=25):
    """Minimise ``fn`` on [lo, hi] starting from the bracket (lo, mid, hi).

    Raises NoInteriorMinimum unless f(mid) is below both endpoint values.
    """
    if not lo < hi:
        raise ValueError("bracket needs lo < hi")
    cache = {}

    def f(x):
        if x not in cache:
            if len(cache) >= max_evals:
                raise _Exhausted
            cache[x] = fn(x)
        return cache[x]

    a, c = lo, hi
    b = 0.5 * (lo + hi)
    fa, fb, fc = f(a), f(b), f(c)
    if not (fb < fa and fb < fc):
        raise NoInteriorMinimum(
            f"no interior minimum in [{lo}, {hi}]: f(lo)={fa:.6g}, f(mid)={fb:.6g}, f(hi)={fc:.6g}"
        )
    try:
        while c - a > 2 * tol:
            if c - b > b - a:
                x = b + (1 - GOLDEN) * (c - b)
                fx = f(x)
                if fx < fb:
                    a, b, fb = b, x, fx
                else:
                    c = x
            else:
                x = b - (1 - GOLDEN) * (b - a)
                fx = f(x)
                if fx < fb:
                    c, b, fb = b, x, fx
                else:
                    a = x
    except _Exhausted:
        pass
    best = min(cache, key=cache.get)
    return RefineResult(best, cache[best], len(cache), tuple(sorted(cache.items())))


class _Exhausted(Exception):
    pass


def refine_minimum(axis, bracket, base, tol=None, max_evals=None):
    """Golden-section search for the N-minimising value of one sweep axis."""
    if axis not in ("t_p", "A", "D", "a0", "flat_fraction"):
        raise ValueError(f"cannot refine over axis {axis!r}")
    tol = DEFAULT_TOL.get(axis, 1e-3 * (bracket[1] - bracket[0])) if tol is None else tol
    max_evals = base.refine_max_evals if max_evals is None else max_evals

    def objective(value):
        row = evaluate_point(base, {axis: float(value)})
        return row.result.n_err if row.result is not None else math.inf

    return golden_section(objective, float(bracket[0]), float(bracket[1]), tol, max_evals)


def suppression_amplitude(params, grid, levels=1, a_max=0.2, tol=1e-6):
    """Smallest pulse amplitude whose peak flux leaves at most ``levels`` bound levels.

    Counting is monotone in the amplitude over the readout regime, so plain
    bisection on the level count suffices.
    """
    def count(a):
        return count_levels(params, flux(params.a0, a, 1.0), grid)

    lo, hi = 0.0, a_max
    if count(lo) <= levels:
        return 0.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        try:
            above = count(mid) > levels
        except QRLError:
            above = False
        if above:
            lo = mid
        else:
            hi = mid
    return hi


@dataclass(frozen=True)
class DScanRow:
    D: float
    a_supp: float = math.nan
    a_best: float = math.nan
    n_best: float = math.nan
    levels: int = -1
    coarse: tuple = ()
    refined: bool = False
    error: str = None


def amplitude_scan(base, t_p, points=None, span=None, workers=1, refine=True, max_extend=3):
    """Best amplitude at fixed t_p for ``base``: coarse grid around the
    suppression amplitude, then golden-section refinement.

    If the coarse minimum sits on an edge of the grid, the grid grows by one
    spacing in that direction (at most ``max_extend`` times) before refining.
    """
    points = base.dscan_A_points if points is None else points
    span = base.dscan_A_span if span is None else span
    cfg = base.with_(t_p=float(t_p))
    params = cfg.params()
    try:
        levels = count_levels(params, grid=cfg.grid(), buffer=cfg.window_buffer)
        a_s = suppression_amplitude(params, cfg.grid())
    except QRLError as exc:
        return DScanRow(cfg.D, error=f"{type(exc).__name__}: {exc}")
    amps = [float(a) for a in np.linspace(span[0] * a_s, span[1] * a_s, points)]
    step = amps[1] - amps[0]
    rows = map_points(cfg, [{"A": a} for a in amps], workers)
    values = [r.result.n_err if r.result is not None else math.inf for r in rows]
    errors = [r.error for r in rows]
    for _ in range(max_extend):
        i = int(np.argmin(values))
        if not math.isfinite(values[i]) or 0 < i < len(amps) - 1:
            break
        a_new = amps[0] - step if i == 0 else amps[-1] + step
        if a_new <= 0:
            break
        row = evaluate_point(cfg, {"A": a_new})
        v = row.result.n_err if row.result is not None else math.inf
        at = 0 if i == 0 else len(amps)
        amps.insert(at, a_new)
        values.insert(at, v)
        errors.insert(at, row.error)
    coarse = tuple(zip(amps, values))
    i = int(np.argmin(values))
    if not math.isfinite(values[i]):
        return DScanRow(cfg.D, a_s, levels=levels, coarse=coarse, error=errors[i])
    best_a, best_n, refined = amps[i], values[i], False
    if refine and 0 < i < len(amps) - 1:
        try:
            res = refine_minimum("A", (amps[i - 1], amps[i + 1]), cfg)
            if res.min_value < best_n:
                best_a, best_n = res.argmin, res.min_value
            refined = True
        except NoInteriorMinimum:
            pass
    return DScanRow(cfg.D, a_s, best_a, best_n, levels, coarse, refined)


def d_scan(t_p, d_values, base, workers=1, refine=True):
    """N(D) table: for each inverse capacitance, the amplitude-optimised error at fixed t_p."""
    return [amplitude_scan(base.with_(D=float(d)), t_p, workers=workers, refine=refine) for d in d_values]


DSCAN_COLUMNS = ("D", "levels", "a_supp", "a_best", "n_best", "fidelity", "refined", "error")


def write_dscan_csv(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(DSCAN_COLUMNS)
        for r in rows:
            w.writerow([
                fmt(r.D), r.levels, fmt(r.a_supp), fmt(r.a_best), fmt(r.n_best),
                fmt(1 - r.n_best), int(r.refined), r.error or "",
            ])
