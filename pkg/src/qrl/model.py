"""Device parameters and the tilted washboard potential of a flux-biased phase qubit.

Energies are angular frequencies in ns^-1 (potential divided by hbar), phases are
dimensionless, times are in ns.
"""
from dataclasses import dataclass, replace
import math

import numpy as np
from scipy import constants
from scipy.optimize import brentq

from .errors import NoBarrier

ROOT_SCAN_STEP = 0.05
ROOT_XTOL = 1e-12
DEFAULT_C = -3.0


@dataclass(frozen=True)
class QubitParams:
    ell: float = 3.71
    d_cap: float = 0.6933
    ej_ns: float = 5310.0
    a0: float = 0.81

    def __post_init__(self):
        for name in ("ell", "d_cap", "ej_ns"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ValueError(f"{name} must be positive and finite, got {value!r}")
        if not math.isfinite(self.a0):
            raise ValueError(f"a0 must be finite, got {self.a0!r}")

    @classmethod
    def from_si(cls, i_c=1.7e-6, inductance=0.72e-9, capacitance=700e-15, a0=0.81):
        """Derive the dimensionless set from critical current, loop inductance and
        junction capacitance (SI units)."""
        e, hbar = constants.e, constants.hbar
        return cls(
            ell=2 * e * i_c * inductance / hbar,
            d_cap=2 * e**2 / (hbar * capacitance) * 1e-9,
            ej_ns=i_c / (2 * e) * 1e-9,
            a0=a0,
        )

    def with_(self, **changes):
        return replace(self, **changes)


@dataclass(frozen=True)
class PotentialGeometry:
    x1: float
    xb: float
    x2: float
    v1: float
    vb: float
    v2: float

    @property
    def barrier(self):
        return self.vb - self.v1


def flux(a0, amplitude, f):
    return 2 * math.pi * (a0 + amplitude * f)


def potential_raw(x, phi, params):
    x = np.asarray(x, dtype=float)
    return params.ej_ns * ((x - phi) ** 2 / (2 * params.ell) - np.cos(x))


def potential_slope(x, phi, params):
    return params.ej_ns * ((np.asarray(x, dtype=float) - phi) / params.ell + np.sin(x))


def potential_curvature(x, phi, params):
    return params.ej_ns * (1.0 / params.ell + np.cos(x))


def potential_flattened(x, phi, params, x_flat):
    """Raw potential up to ``x_flat``, constant at its ``x_flat`` value beyond."""
    x = np.asarray(x, dtype=float)
    return potential_raw(np.minimum(x, x_flat), phi, params)


def _stationary_points(phi, params, lo, hi):
    xs = np.arange(lo, hi + ROOT_SCAN_STEP, ROOT_SCAN_STEP)
    g = potential_slope(xs, phi, params)
    roots = []
    for i in range(len(xs) - 1):
        if g[i] == 0.0:
            roots.append(float(xs[i]))
        elif g[i] * g[i + 1] < 0:
            roots.append(brentq(potential_slope, xs[i], xs[i + 1], args=(phi, params), xtol=ROOT_XTOL))
    return roots


def find_geometry(phi, params, c=DEFAULT_C):
    """Shallow-well minimum, barrier top and deep-well minimum for flux ``phi``.

    Raises NoBarrier when the shallow well no longer exists.
    """
    roots = _stationary_points(phi, params, c, 2 * math.pi + phi)
    curv = [potential_curvature(r, phi, params) for r in roots]
    for i in range(len(roots) - 2):
        if curv[i] > 0 and curv[i + 1] < 0 and curv[i + 2] > 0:
            x1, xb, x2 = roots[i:i + 3]
            v1, vb, v2 = (float(potential_raw(r, phi, params)) for r in (x1, xb, x2))
            return PotentialGeometry(x1, xb, x2, v1, vb, v2)
    raise NoBarrier(
        f"flux phi={phi:.6g} leaves {len(roots)} stationary point(s) in [{c}, {2 * math.pi + phi:.4g}]; "
        "the shallow well is washed out"
    )


def static_geometry(params, c=DEFAULT_C):
    return find_geometry(flux(params.a0, 0.0, 0.0), params, c)


def deep_minimum(phi, params, guess, tol=1e-12, max_iter=50):
    """Newton iteration for the deep-well minimum, warm-started at ``guess``."""
    x = guess
    for _ in range(max_iter):
        step = (x - phi) / params.ell + math.sin(x)
        step /= 1.0 / params.ell + math.cos(x)
        x -= step
        if abs(step) < tol:
            return x
    raise NoBarrier(f"deep-well minimum did not converge near x={guess}")
