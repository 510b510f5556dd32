"""Flat ``key = value`` run configuration; defaults describe the reference device.

Lines are ``key = value``; ``#`` starts a comment. Sweep axes are written as
``sweep.<axis> = v1, v2, ...`` or ``sweep.<axis> = lo:hi:count`` and run in the
order they appear. The effective configuration echoed into manifests parses back
to an identical RunConfig.
"""
from dataclasses import dataclass, field, fields, replace
import math

import numpy as np

from .errors import ConfigTypeError, InvariantViolation, UnknownKey
from .evolve import ENERGY_REFERENCES, FLATTEN_MODES, X_CUT_MODES, Grid, NumericsConfig
from .model import QubitParams
from .pulse import PulseSpec, Shape

MODES = ("single", "trace", "sweep", "dscan", "spectrum")
SWEEP_AXES = ("A", "t_p", "D", "a0", "shape", "flat_fraction", "dx", "dt")
SHAPES = tuple(s.value for s in Shape)


@dataclass(frozen=True)
class RunConfig:
    mode: str = "single"
    shape: str = "sine"
    A: float = 0.034
    t_p: float = 8.0
    flat_fraction: float = 0.5
    a0: float = 0.81
    D: float = 0.6933
    ell: float = 3.71
    ej_ns: float = 5310.0
    c: float = -3.0
    d: float = 797.0
    dx: float = 0.01
    dt: float = 1e-4
    flatten_mode: str = "instantaneous"
    x_cut_mode: str = "static"
    energy_reference: str = "well"
    observer_stride: int = 100
    settle_ns: float = 0.0
    window_buffer: float = 1.0
    n_levels: int = 10
    workers: int = 1
    dscan_D: tuple = ()
    dscan_A_points: int = 8
    dscan_A_span: tuple = (0.8, 1.15)
    refine_max_evals: int = 25
    sweep: tuple = field(default=())

    def params(self):
        return QubitParams(ell=self.ell, d_cap=self.D, ej_ns=self.ej_ns, a0=self.a0)

    def pulse(self):
        return PulseSpec(Shape(self.shape), self.A, self.t_p, self.flat_fraction)

    def grid(self):
        return Grid(self.c, self.d, self.dx)

    def numerics(self):
        return NumericsConfig(
            dt=self.dt, flatten_mode=self.flatten_mode, observer_stride=self.observer_stride,
            grid=self.grid(), x_cut_mode=self.x_cut_mode, settle_ns=self.settle_ns,
            energy_reference=self.energy_reference,
        )

    def with_(self, **changes):
        return replace(self, **changes)

    def to_text(self):
        lines = []
        for key, spec in KEYS.items():
            value = getattr(self, spec.attr)
            if spec.kind == "floats":
                if not value:
                    continue
                text = ", ".join(_fmt(v) for v in value)
            else:
                text = _fmt(value)
            lines.append(f"{key} = {text}")
        for axis, values in self.sweep:
            lines.append(f"sweep.{axis} = " + ", ".join(_fmt(v) for v in values))
        return "\n".join(lines) + "\n"


def _fmt(value):
    if isinstance(value, float):
        return repr(value)
    return str(value)


@dataclass(frozen=True)
class _Key:
    attr: str
    kind: str  # float | int | str | floats
    choices: tuple = ()


KEYS = {
    "mode": _Key("mode", "str", MODES),
    "shape": _Key("shape", "str", SHAPES),
    "A": _Key("A", "float"),
    "t_p": _Key("t_p", "float"),
    "flat_fraction": _Key("flat_fraction", "float"),
    "a0": _Key("a0", "float"),
    "D": _Key("D", "float"),
    "ell": _Key("ell", "float"),
    "ej_ns": _Key("ej_ns", "float"),
    "c": _Key("c", "float"),
    "d": _Key("d", "float"),
    "dx": _Key("dx", "float"),
    "dt": _Key("dt", "float"),
    "flatten_mode": _Key("flatten_mode", "str", FLATTEN_MODES),
    "x_cut_mode": _Key("x_cut_mode", "str", X_CUT_MODES),
    "energy_reference": _Key("energy_reference", "str", ENERGY_REFERENCES),
    "observer_stride": _Key("observer_stride", "int"),
    "settle_ns": _Key("settle_ns", "float"),
    "window_buffer": _Key("window_buffer", "float"),
    "n_levels": _Key("n_levels", "int"),
    "workers": _Key("workers", "int"),
    "dscan.D": _Key("dscan_D", "floats"),
    "dscan.A_points": _Key("dscan_A_points", "int"),
    "dscan.A_span": _Key("dscan_A_span", "floats"),
    "refine.max_evals": _Key("refine_max_evals", "int"),
}


def _convert(key, kind, text, line, choices=()):
    try:
        if kind == "float":
            value = float(text)
            if not math.isfinite(value):
                raise ValueError
            return value
        if kind == "int":
            return int(text)
        if kind == "floats":
            return tuple(float(v) for v in _split(text))
    except ValueError:
        raise ConfigTypeError(key, f"cannot read {text!r} as {kind}", line) from None
    if choices and text not in choices:
        raise InvariantViolation(key, f"{text!r} is not one of {', '.join(choices)}", line)
    return text


def _split(text):
    return [v.strip() for v in text.split(",") if v.strip()]


def parse_axis(axis, text, line=None):
    key = f"sweep.{axis}"
    if axis not in SWEEP_AXES:
        raise UnknownKey(key, f"sweep axis must be one of {', '.join(SWEEP_AXES)}", line)
    if axis == "shape":
        values = tuple(_split(text))
        for v in values:
            if v not in SHAPES:
                raise InvariantViolation(key, f"{v!r} is not one of {', '.join(SHAPES)}", line)
    elif ":" in text and "," not in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigTypeError(key, "range must be lo:hi:count", line)
        try:
            lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError:
            raise ConfigTypeError(key, f"cannot read range {text!r}", line) from None
        if count < 1:
            raise InvariantViolation(key, "range count must be positive", line)
        values = tuple(float(v) for v in np.linspace(lo, hi, count))
    else:
        try:
            values = tuple(float(v) for v in _split(text))
        except ValueError:
            raise ConfigTypeError(key, f"cannot read {text!r} as numbers", line) from None
    if not values:
        raise InvariantViolation(key, "sweep axis is empty", line)
    return values


def _apply(values, sweep, key, text, line):
    if key.startswith("sweep."):
        axis = key[len("sweep."):]
        parsed = parse_axis(axis, text, line)
        sweep[axis] = parsed
        return
    spec = KEYS.get(key)
    if spec is None:
        raise UnknownKey(key, "unknown configuration key", line)
    values[spec.attr] = _convert(key, spec.kind, text, line, spec.choices)


def parse_config(text="", overrides=()):
    """Parse config text, then apply ``key=value`` overrides, then validate."""
    values, sweep, where = {}, {}, {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigTypeError(key or raw.strip(), "expected 'key = value'", lineno)
        _apply(values, sweep, key, value, lineno)
        where[key] = lineno
    for item in overrides:
        key, sep, value = item.partition("=")
        key, value = key.strip(), value.strip()
        if not sep:
            raise ConfigTypeError(key, "override must be key=value")
        _apply(values, sweep, key, value, None)
        where[key] = None
    cfg = RunConfig(**values, sweep=tuple(sweep.items()))
    validate(cfg, where)
    return cfg


def validate(cfg, where=None):
    """Run every module-level invariant check up front."""
    where = where or {}

    def check(key, build):
        try:
            build()
        except ValueError as exc:
            raise InvariantViolation(key, str(exc), where.get(key)) from None

    check("D", cfg.params)
    check("A", cfg.pulse)
    check("dx", cfg.grid)
    check("dt", cfg.numerics)
    if cfg.workers < 1:
        raise InvariantViolation("workers", "must be at least 1", where.get("workers"))
    if cfg.n_levels < 1:
        raise InvariantViolation("n_levels", "must be at least 1", where.get("n_levels"))
    if cfg.window_buffer <= 0:
        raise InvariantViolation("window_buffer", "must be positive", where.get("window_buffer"))
    if any(v <= 0 for v in cfg.dscan_D):
        raise InvariantViolation("dscan.D", "values must be positive", where.get("dscan.D"))
    if len(cfg.dscan_A_span) != 2 or not 0 < cfg.dscan_A_span[0] < cfg.dscan_A_span[1]:
        raise InvariantViolation("dscan.A_span", "needs two increasing positive fractions", where.get("dscan.A_span"))
    if cfg.dscan_A_points < 3:
        raise InvariantViolation("dscan.A_points", "needs at least 3 points", where.get("dscan.A_points"))
    names = [axis for axis, _ in cfg.sweep]
    if len(set(names)) != len(names):
        raise InvariantViolation("sweep", "axis names must be unique")
    for axis, values in cfg.sweep:
        for v in values:
            check(f"sweep.{axis}", lambda: validate_point(cfg, {axis: v}))
    if cfg.mode == "sweep" and not cfg.sweep:
        raise InvariantViolation("mode", "sweep mode needs at least one sweep.<axis> key", where.get("mode"))
    if cfg.mode == "dscan" and not cfg.dscan_D:
        raise InvariantViolation("mode", "dscan mode needs dscan.D", where.get("mode"))
    return cfg


def apply_point(cfg, point):
    """RunConfig with the given sweep-axis values substituted."""
    return replace(cfg, **point)


def validate_point(cfg, point):
    c = apply_point(cfg, point)
    c.params()
    c.pulse()
    c.numerics()
    return c


def field_names():
    return [f.name for f in fields(RunConfig)]
