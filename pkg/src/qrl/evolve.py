"""Crank-Nicolson propagation of the phase wave function under a readout pulse.

The potential is the washboard flattened beyond the deep-well minimum, so escaped
amplitude runs off to the right instead of returning. Several states can be
propagated together; they share the tridiagonal factorisation at every step, and
each one sees exactly the same arithmetic as it would alone.
"""
from dataclasses import dataclass, field
from functools import cached_property
import csv
import math

import numba
import numpy as np

from .model import deep_minimum, flux, static_geometry, find_geometry
from .pulse import envelope_value
from .errors import NoBarrier, SolverBreakdown

FLATTEN_MODES = ("instantaneous", "static")
X_CUT_MODES = ("static", "instantaneous")
ENERGY_REFERENCES = ("well", "none")
# nodes past the static deep-well minimum on which the potential is evaluated explicitly
FLAT_MARGIN = 1.5
# amplitudes below this are flushed to zero: subnormal arithmetic is ~100x slower
FLUSH = 1e-150


@dataclass(frozen=True)
class Grid:
    c: float = -3.0
    d: float = 797.0
    dx: float = 0.01

    def __post_init__(self):
        if not self.c < self.d:
            raise ValueError(f"grid needs c < d, got c={self.c}, d={self.d}")
        if not self.dx > 0:
            raise ValueError(f"dx must be positive, got {self.dx}")
        if self.n < 5:
            raise ValueError("grid needs at least 3 interior nodes")

    @property
    def n(self):
        return int(round((self.d - self.c) / self.dx)) + 1

    @cached_property
    def x(self):
        x = self.c + self.dx * np.arange(self.n)
        x.flags.writeable = False
        return x

    def index_at_or_below(self, x_cut):
        """Number of nodes with x_i <= x_cut."""
        return int(np.searchsorted(self.x, x_cut, side="right"))


@dataclass(frozen=True, eq=False)
class WaveFunction:
    values: np.ndarray
    grid: Grid

    def __post_init__(self):
        values = np.array(self.values, dtype=np.complex128)
        if values.shape != (self.grid.n,):
            raise ValueError(f"expected {self.grid.n} amplitudes, got shape {values.shape}")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    def norm(self):
        return float(np.sum(np.abs(self.values) ** 2) * self.grid.dx)

    def normalized(self):
        return WaveFunction(self.values / math.sqrt(self.norm()), self.grid)

    def overlap(self, other):
        return complex(np.vdot(self.values, other.values) * self.grid.dx)


@dataclass(frozen=True)
class NumericsConfig:
    dt: float = 1e-4
    flatten_mode: str = "instantaneous"
    observer_stride: int = 100
    grid: Grid = field(default_factory=Grid)
    x_cut_mode: str = "static"
    settle_ns: float = 0.0
    energy_reference: str = "well"

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if int(self.observer_stride) != self.observer_stride or self.observer_stride < 1:
            raise ValueError(f"observer_stride must be a positive integer, got {self.observer_stride}")
        if self.flatten_mode not in FLATTEN_MODES:
            raise ValueError(f"flatten_mode must be one of {FLATTEN_MODES}")
        if self.x_cut_mode not in X_CUT_MODES:
            raise ValueError(f"x_cut_mode must be one of {X_CUT_MODES}")
        if self.energy_reference not in ENERGY_REFERENCES:
            raise ValueError(f"energy_reference must be one of {ENERGY_REFERENCES}")
        if not self.settle_ns >= 0:
            raise ValueError(f"settle_ns must be non-negative, got {self.settle_ns}")


@numba.njit(cache=True)
def _advance(psi, x_loc, code, amp, t_p, flat, a0, ell, ej, alpha,
             t_base, s0, h, nsteps, instantaneous, xf_state, x_ref, use_ref):
    # psi is (n, k): n grid nodes (boundary rows stay zero), k states sharing the matrix.
    n, k = psi.shape
    m = x_loc.shape[0]  # interior rows 1..m carry an explicitly evaluated potential
    ih = 0.5j * h
    ao = -ih * alpha
    bo = ih * alpha
    cp = np.empty(n, np.complex128)
    y = np.zeros((n, k), np.complex128)
    vl = np.empty(m)
    xf = xf_state[0]
    two_ell = 2.0 * ell
    for s in range(nsteps):
        tm = t_base + (s0 + s + 0.5) * h
        phi = 2.0 * math.pi * (a0 + amp * envelope_value(code, tm, t_p, flat))
        if instantaneous:
            for _ in range(60):
                step = ((xf - phi) / ell + math.sin(xf)) / (1.0 / ell + math.cos(xf))
                xf -= step
                if abs(step) < 1e-12:
                    break
        ref = 0.0
        if use_ref:
            ref = ej * ((x_ref - phi) ** 2 / two_ell - math.cos(x_ref))
        plateau = ej * ((xf - phi) ** 2 / two_ell - math.cos(xf)) - ref
        for i in range(m):
            xi = x_loc[i]
            if xi <= xf:
                vl[i] = ej * ((xi - phi) ** 2 / two_ell - math.cos(xi)) - ref
            else:
                vl[i] = plateau

        # forward elimination fused with the explicit half step
        cprev = 0.0j
        inv = 0.0j
        conv = n - 1
        for i in range(1, n - 1):
            vi = vl[i - 1] if i - 1 < m else plateau
            hd = ih * (2.0 * alpha + vi)
            b = 1.0 + hd - ao * cprev
            if b == 0:
                return i
            inv = 1.0 / b
            cnew = ao * inv
            dd = 1.0 - hd
            for j in range(k):
                r = dd * psi[i, j] + bo * (psi[i - 1, j] + psi[i + 1, j])
                z = (r - ao * y[i - 1, j]) * inv
                y[i, j] = z if abs(z.real) + abs(z.imag) > FLUSH else 0.0
            cp[i] = cnew
            if i - 1 >= m and abs(cnew - cprev) <= 1e-15 * abs(cnew):
                # constant rows from here on and the recursion has reached its fixed point
                conv = i
                break
            cprev = cnew
        if conv < n - 1:
            dd = 1.0 - ih * (2.0 * alpha + plateau)
            for i in range(conv + 1, n - 1):
                for j in range(k):
                    r = dd * psi[i, j] + bo * (psi[i - 1, j] + psi[i + 1, j])
                    z = (r - ao * y[i - 1, j]) * inv
                    y[i, j] = z if abs(z.real) + abs(z.imag) > FLUSH else 0.0
        for j in range(k):
            psi[n - 2, j] = y[n - 2, j]
        for i in range(n - 3, conv, -1):
            for j in range(k):
                z = y[i, j] - cprev * psi[i + 1, j]
                psi[i, j] = z if abs(z.real) + abs(z.imag) > FLUSH else 0.0
        for i in range(min(conv, n - 3), 0, -1):
            c = cp[i]
            for j in range(k):
                z = y[i, j] - c * psi[i + 1, j]
                psi[i, j] = z if abs(z.real) + abs(z.imag) > FLUSH else 0.0
    xf_state[0] = xf
    return -1


class _Drive:
    """Per-run constants handed to the kernel."""

    def __init__(self, spec, params, cfg):
        grid = cfg.grid
        geom = static_geometry(params, grid.c)
        self.spec = spec
        self.params = params
        self.cfg = cfg
        self.geometry = geom
        self.instantaneous = cfg.flatten_mode == "instantaneous"
        x_limit = geom.x2 + FLAT_MARGIN
        interior = grid.x[1:-1]
        self.x_loc = np.ascontiguousarray(interior[interior <= x_limit])
        peak = deep_minimum(flux(params.a0, spec.amplitude, 1.0), params, geom.x2)
        if not (self.x_loc.size and max(peak, geom.x2) < self.x_loc[-1]):
            raise ValueError("grid too short to hold the deep-well minimum")
        self.xf_state = np.array([geom.x2])
        self.x_ref = geom.x1
        self.use_ref = cfg.energy_reference == "well"
        self.alpha = params.d_cap / grid.dx**2

    def advance(self, psi, t_base, s0, h, nsteps):
        p, s = self.params, self.spec
        status = _advance(
            psi, self.x_loc, s.shape.code, s.amplitude, s.t_p, s.flat_fraction,
            p.a0, p.ell, p.ej_ns, self.alpha, t_base, s0, h, nsteps,
            self.instantaneous, self.xf_state, self.x_ref, self.use_ref,
        )
        if status >= 0:
            raise SolverBreakdown(f"zero pivot at row {status}")
        if not np.all(np.isfinite(psi[:, 0])):
            raise SolverBreakdown("non-finite amplitudes")


def _as_batch(states):
    single = isinstance(states, WaveFunction)
    states = [states] if single else list(states)
    if not states:
        raise ValueError("nothing to propagate")
    grid = states[0].grid
    for st in states:
        if st.grid != grid:
            raise ValueError("all states must share one grid")
        if st.values[0] != 0 or st.values[-1] != 0:
            raise ValueError("boundary amplitudes must be zero")
    psi = np.ascontiguousarray(np.stack([st.values for st in states], axis=1))
    return psi, grid, single


def _unbatch(psi, grid, single):
    out = [WaveFunction(psi[:, j], grid) for j in range(psi.shape[1])]
    return out[0] if single else out


def cn_step(psi, t, dt, spec, params, cfg=None):
    """One Crank-Nicolson step from ``t`` to ``t + dt`` with H taken at the midpoint."""
    cfg = cfg or NumericsConfig(grid=psi.grid)
    arr, grid, single = _as_batch(psi)
    drive = _Drive(spec, params, cfg)
    if drive.instantaneous:
        f = envelope_value(spec.shape.code, t + 0.5 * dt, spec.t_p, spec.flat_fraction)
        drive.xf_state[0] = deep_minimum(flux(params.a0, spec.amplitude, f), params, drive.geometry.x2)
    drive.advance(arr, float(t), 0, float(dt), 1)
    return _unbatch(arr, grid, single)


def step_plan(duration, dt):
    """Number of full steps and the length of a trailing partial step (0 if none)."""
    ratio = duration / dt
    full = int(round(ratio))
    if abs(ratio - full) > 1e-9 * max(1.0, ratio):
        full = int(math.floor(ratio))
    remainder = duration - full * dt
    if remainder <= 1e-12 * dt:
        remainder = 0.0
    return full, remainder


def propagate(psi0, spec, params, cfg, observers=(), duration=None):
    """Advance from t = 0 to t_p (+ settle time) in steps of cfg.dt.

    ``psi0`` is one WaveFunction or a sequence of them. Observers are called as
    ``obs(t, psi)`` with ``psi`` a read-only (k, n) view, every ``observer_stride``
    steps (starting at t = 0) and once at the final time.
    """
    arr, grid, single = _as_batch(psi0)
    drive = _Drive(spec, params, cfg)
    total = spec.t_p + cfg.settle_ns if duration is None else duration
    full, remainder = step_plan(total, cfg.dt)
    stride = int(cfg.observer_stride)

    def notify(t):
        view = arr.T
        view.flags.writeable = False
        for obs in observers:
            obs(t, view)

    notify(0.0)
    done = 0
    while done < full:
        chunk = min(stride - done % stride, full - done)
        drive.advance(arr, 0.0, done, cfg.dt, chunk)
        done += chunk
        if done % stride == 0 and (done < full or remainder):
            notify(done * cfg.dt)
    if remainder:
        drive.advance(arr, full * cfg.dt, 0, remainder, 1)
    if total > 0:
        notify(total)
    return _unbatch(arr, grid, single)


def survival_probability(psi, x_cut):
    """Probability mass at nodes x_i <= x_cut (same quadrature as the norm)."""
    values = psi.values if isinstance(psi, WaveFunction) else psi
    grid = psi.grid
    i = grid.index_at_or_below(x_cut)
    return float(np.sum(np.abs(values[:i]) ** 2) * grid.dx)


def _mass(view, start, stop, dx):
    block = view[:, start:stop]
    return (block.real**2 + block.imag**2).sum(axis=1) * dx


class TraceRecorder:
    """Observer collecting norm, survival and far-tail mass per state."""

    def __init__(self, grid, x_cut, tail_from=None):
        self.grid = grid
        self._x_cut = x_cut
        self.tail_start = grid.index_at_or_below(tail_from if tail_from is not None else grid.c + 0.95 * (grid.d - grid.c))
        self.t = []
        self.norm = []
        self.survival = []
        self.tail = []

    def x_cut(self, t):
        return self._x_cut(t) if callable(self._x_cut) else self._x_cut

    def __call__(self, t, psi):
        dx = self.grid.dx
        icut = self.grid.index_at_or_below(self.x_cut(t))
        inside = _mass(psi, 0, icut, dx)
        rest = _mass(psi, icut, psi.shape[1], dx)
        self.t.append(float(t))
        self.norm.append(inside + rest)
        self.survival.append(inside)
        self.tail.append(_mass(psi, self.tail_start, psi.shape[1], dx))

    def rows(self, state=0):
        return [(t, float(nm[state]), float(sv[state])) for t, nm, sv in zip(self.t, self.norm, self.survival)]


def barrier_cut(spec, params, cfg):
    """Integration boundary of the shallow well: static barrier top, or the
    instantaneous one when cfg.x_cut_mode says so (falls back to the static cut
    once the well is washed out)."""
    static = static_geometry(params, cfg.grid.c).xb
    if cfg.x_cut_mode == "static":
        return static

    def cut(t):
        f = envelope_value(spec.shape.code, t, spec.t_p, spec.flat_fraction)
        try:
            return find_geometry(flux(params.a0, spec.amplitude, f), params, cfg.grid.c).xb
        except NoBarrier:
            return static

    return cut


def fmt(value):
    """Round-trip float formatting used in every CSV and record."""
    return repr(float(value))


def write_trace_csv(path, rows):
    """Write (t_ns, norm, survival) rows with a header and full double precision."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t_ns", "norm", "survival"])
        for t, nm, sv in rows:
            w.writerow([fmt(t), fmt(nm), fmt(sv)])
