"""Two-branch readout experiment: P10, P01, the error N and fidelity F."""
from dataclasses import dataclass, field
import math
import time

import numpy as np

from . import __version__
from .errors import TooFewLevels
from .evolve import NumericsConfig, TraceRecorder, barrier_cut, fmt, propagate, survival_probability
from .model import QubitParams, find_geometry, flux, static_geometry
from .pulse import PulseSpec, Shape
from .spectrum import quasi_bound_states

CSV_COLUMNS = (
    "shape", "A", "t_p_ns", "flat_fraction", "a0", "D", "dx", "dt", "flatten_mode",
    "p10", "p01", "n_err", "fidelity", "wall_seconds",
)
WELL_WEIGHT_MIN = 0.99


@dataclass(frozen=True)
class ReadoutResult:
    p10: float
    p01: float
    params: QubitParams
    pulse: PulseSpec
    numerics: NumericsConfig
    wall_seconds: float = 0.0
    traces: object = field(default=None, compare=False, repr=False)

    @property
    def n_err(self):
        return self.p10 + self.p01

    @property
    def fidelity(self):
        return 1.0 - self.n_err

    def provenance(self):
        g = self.numerics.grid
        return {
            "code_version": __version__,
            "ell": self.params.ell,
            "d_cap": self.params.d_cap,
            "ej_ns": self.params.ej_ns,
            "a0": self.params.a0,
            "shape": self.pulse.shape.value,
            "amplitude": self.pulse.amplitude,
            "t_p": self.pulse.t_p,
            "flat_fraction": self.pulse.effective_flat_fraction,
            "c": g.c,
            "d": g.d,
            "dx": g.dx,
            "dt": self.numerics.dt,
            "flatten_mode": self.numerics.flatten_mode,
            "x_cut_mode": self.numerics.x_cut_mode,
            "energy_reference": self.numerics.energy_reference,
            "settle_ns": self.numerics.settle_ns,
            "observer_stride": self.numerics.observer_stride,
        }

    def csv_row(self):
        p, s, n = self.params, self.pulse, self.numerics
        return [
            s.shape.value, fmt(s.amplitude), fmt(s.t_p), fmt(s.effective_flat_fraction),
            fmt(p.a0), fmt(p.d_cap), fmt(n.grid.dx), fmt(n.dt), n.flatten_mode,
            fmt(self.p10), fmt(self.p01), fmt(self.n_err), fmt(self.fidelity),
            fmt(self.wall_seconds),
        ]

    def to_record(self):
        """Key/value text record: one ``key = value`` per line, results first."""
        lines = [
            "# readout result",
            f"p10 = {fmt(self.p10)}",
            f"p01 = {fmt(self.p01)}",
            f"n_err = {fmt(self.n_err)}",
            f"fidelity = {fmt(self.fidelity)}",
            f"wall_seconds = {fmt(self.wall_seconds)}",
        ]
        for key, value in self.provenance().items():
            lines.append(f"{key} = {fmt(value) if isinstance(value, float) else value}")
        return "\n".join(lines) + "\n"


def parse_record(text):
    """Inverse of ReadoutResult.to_record (numbers come back as floats)."""
    out = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        try:
            out[key] = float(value)
        except ValueError:
            out[key] = value
    return out


def prepare_qubit_states(params, grid):
    """|0> and |1> of the static shallow well."""
    states = quasi_bound_states(params, 2, grid)
    if len(states) < 2:
        raise TooFewLevels(f"static well holds {len(states)} level(s); need 2")
    for i, st in enumerate(states):
        if st.well_weight < WELL_WEIGHT_MIN:
            raise TooFewLevels(f"level {i} is not localised in the well (weight {st.well_weight:.4f})")
    return states


def run_readout(params, spec, cfg, record_traces=False, order=(0, 1)):
    """Propagate |0> and |1> under the same pulse and read survival at the end.

    ``order`` only permutes the columns handed to the propagator; results do not
    depend on it.
    """
    start = time.perf_counter()
    grid = cfg.grid
    # raises NoBarrier when the pulse washes the shallow well out entirely
    find_geometry(flux(params.a0, spec.amplitude, 1.0), params, grid.c)
    states = prepare_qubit_states(params, grid)
    cut = barrier_cut(spec, params, cfg)
    recorder = TraceRecorder(grid, cut) if record_traces else None
    batch = [states[i].state for i in order]
    finals = propagate(batch, spec, params, cfg, observers=[recorder] if recorder else ())
    x_end = cut(spec.t_p + cfg.settle_ns) if callable(cut) else cut
    survival = {lvl: survival_probability(psi, x_end) for lvl, psi in zip(order, finals)}
    p10 = survival[1]
    p01 = 1.0 - survival[0]
    traces = None
    if recorder is not None:
        col = {lvl: j for j, lvl in enumerate(order)}
        traces = ReadoutTraces(
            t=np.array(recorder.t),
            p=np.array([s[col[1]] for s in recorder.survival]),
            q=np.array([1.0 - s[col[0]] for s in recorder.survival]),
            norm0=np.array([nm[col[0]] for nm in recorder.norm]),
            norm1=np.array([nm[col[1]] for nm in recorder.norm]),
            tail=np.array([max(tl) for tl in recorder.tail]),
        )
    return ReadoutResult(p10, p01, params, spec, cfg, time.perf_counter() - start, traces)


@dataclass(frozen=True, eq=False)
class ReadoutTraces:
    """P(t) (|1> not yet tunnelled) and Q(t) (|0> already tunnelled)."""

    t: np.ndarray
    p: np.ndarray
    q: np.ndarray
    norm0: np.ndarray
    norm1: np.ndarray
    tail: np.ndarray


@dataclass(frozen=True)
class DecayFit:
    rate: float
    undetectable: bool
    final_survival: float
    points_used: int


def decay_rate(params, held_phi, level, horizon, cfg, window=(0.2, 0.9), undetectable_above=0.999):
    """Static tunnelling rate (ns^-1) of a shallow-well level at constant flux.

    Fits ln(survival) linearly over the samples whose survival lies inside
    ``window`` and returns minus the slope.
    """
    held = params.with_(a0=held_phi / (2 * math.pi))
    states = quasi_bound_states(held, level + 1, cfg.grid)
    if len(states) <= level:
        raise TooFewLevels(f"level {level} does not exist at phi={held_phi:.6g} ({len(states)} levels)")
    spec = PulseSpec(Shape.SINE, 0.0, horizon)
    cut = static_geometry(held, cfg.grid.c).xb
    recorder = TraceRecorder(cfg.grid, cut)
    plain = NumericsConfig(
        dt=cfg.dt, flatten_mode=cfg.flatten_mode, observer_stride=cfg.observer_stride,
        grid=cfg.grid, energy_reference=cfg.energy_reference,
    )
    propagate(states[level].state, spec, held, plain, observers=[recorder])
    t = np.array(recorder.t)
    s = np.array([v[0] for v in recorder.survival])
    if s.min() >= undetectable_above:
        return DecayFit(0.0, True, float(s[-1]), 0)
    lo, hi = window
    mask = (s >= lo) & (s <= hi)
    if mask.sum() < 3:
        raise ValueError(
            f"only {int(mask.sum())} samples with survival in {window}; adjust the horizon or observer stride"
        )
    slope = np.polyfit(t[mask], np.log(s[mask]), 1)[0]
    return DecayFit(float(-slope), False, float(s[-1]), int(mask.sum()))

