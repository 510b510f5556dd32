"""Static Hamiltonian, shallow-well quasi-bound states and level counting.

Bound states are computed on a truncated window [c, xb + buffer] whose potential
is the washboard up to the barrier top and held at the barrier height beyond it,
closed by a Dirichlet wall. Holding the potential flat removes the spurious box
states that the steep drop into the deep well would otherwise place below the
barrier.
"""
from dataclasses import dataclass
import math

import numpy as np

from .errors import DegenerateWindow
from .evolve import Grid, WaveFunction
from .model import find_geometry, flux, potential_flattened, potential_raw, static_geometry
from .tridiag import eigenvalues_bisect, inverse_iteration, sturm_count

WINDOW_BUFFER = 1.0
MARGINAL_FRACTION = 1e-3
MIN_WINDOW_NODES = 10


@dataclass(frozen=True, eq=False)
class EigenPair:
    energy: float
    state: WaveFunction
    well_weight: float
    marginal: bool = False


def hamiltonian_tridiagonal(grid, phi, params, flatten="instantaneous"):
    """(diag, off) of the discretised H on the interior nodes of ``grid``.

    ``flatten`` is "instantaneous" (flat beyond the deep minimum at this flux),
    "static" (flat beyond the deep minimum at the dc bias) or "none".
    """
    x = grid.x[1:-1]
    if flatten == "none":
        v = potential_raw(x, phi, params)
    else:
        if flatten == "instantaneous":
            x_flat = find_geometry(phi, params, grid.c).x2
        elif flatten == "static":
            x_flat = static_geometry(params, grid.c).x2
        else:
            raise ValueError(f"unknown flatten mode {flatten!r}")
        v = potential_flattened(x, phi, params, x_flat)
    alpha = params.d_cap / grid.dx**2
    return 2 * alpha + v, np.full(x.size - 1, -alpha)


def window_hamiltonian(params, phi, grid, buffer=WINDOW_BUFFER):
    """Window matrix, number of window nodes and the geometry it was built from."""
    geom = find_geometry(phi, params, grid.c)
    x = grid.x[1:-1]
    m = int(np.searchsorted(x, geom.xb + buffer, side="right"))
    if m < MIN_WINDOW_NODES:
        raise DegenerateWindow(f"window [c, xb + {buffer}] holds only {m} nodes")
    xw = x[:m]
    v = np.where(xw > geom.xb, geom.vb, potential_raw(xw, phi, params))
    alpha = params.d_cap / grid.dx**2
    return 2 * alpha + v, np.full(m - 1, -alpha), m, geom


def count_levels(params, phi=None, grid=None, buffer=WINDOW_BUFFER):
    """Number of shallow-well levels strictly below the barrier top."""
    grid = grid or Grid()
    phi = flux(params.a0, 0.0, 0.0) if phi is None else phi
    diag, off, _, geom = window_hamiltonian(params, phi, grid, buffer)
    return sturm_count(diag, off, geom.vb)


def quasi_bound_states(params, n_max, grid=None, phi=None, buffer=WINDOW_BUFFER):
    """Shallow-well states below the barrier, lowest first, embedded in ``grid``."""
    grid = grid or Grid()
    phi = flux(params.a0, 0.0, 0.0) if phi is None else phi
    diag, off, m, geom = window_hamiltonian(params, phi, grid, buffer)
    count = min(sturm_count(diag, off, geom.vb), n_max)
    energies = eigenvalues_bisect(diag, off, range(count))
    icut = grid.index_at_or_below(geom.xb)
    pairs = []
    for energy in energies:
        vec = inverse_iteration(diag, off, energy)
        values = np.zeros(grid.n, dtype=np.complex128)
        values[1:m + 1] = vec / math.sqrt(grid.dx)
        state = WaveFunction(values, grid).normalized()
        weight = float(np.sum(np.abs(state.values[:icut]) ** 2) * grid.dx)
        marginal = geom.vb - energy < MARGINAL_FRACTION * geom.barrier
        pairs.append(EigenPair(float(energy), state, weight, bool(marginal)))
    return pairs


def harmonic_spacing(params, phi=None, c=-3.0):
    """Small-oscillation frequency sqrt(2 D v''(x1)) of the shallow well."""
    phi = flux(params.a0, 0.0, 0.0) if phi is None else phi
    geom = find_geometry(phi, params, c)
    curvature = params.ej_ns * (1 / params.ell + math.cos(geom.x1))
    return math.sqrt(2 * params.d_cap * curvature)
