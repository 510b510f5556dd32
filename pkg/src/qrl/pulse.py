"""Readout pulse envelopes f(t) in [0, 1].

``t_p`` is the full width of the pulse at zero level. All shapes are symmetric
about t_p/2 and vanish outside [0, t_p].
"""
from dataclasses import dataclass, replace
from enum import Enum
import math

import numba
import numpy as np

SINE, SINE2, SINE4, TRAPEZOID, SINE_TRAPEZOID = range(5)


class Shape(str, Enum):
    SINE = "sine"
    SINE2 = "sine2"
    SINE4 = "sine4"
    TRAPEZOID = "trapezoid"
    SINE_TRAPEZOID = "sine_trapezoid"

    @property
    def code(self):
        return _CODES[self]


_CODES = {
    Shape.SINE: SINE,
    Shape.SINE2: SINE2,
    Shape.SINE4: SINE4,
    Shape.TRAPEZOID: TRAPEZOID,
    Shape.SINE_TRAPEZOID: SINE_TRAPEZOID,
}


@dataclass(frozen=True)
class PulseSpec:
    shape: Shape = Shape.SINE
    amplitude: float = 0.034
    t_p: float = 8.0
    flat_fraction: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "shape", Shape(self.shape))
        if not (self.t_p > 0 and math.isfinite(self.t_p)):
            raise ValueError(f"t_p must be positive, got {self.t_p!r}")
        if not (self.amplitude >= 0 and math.isfinite(self.amplitude)):
            raise ValueError(f"amplitude must be non-negative, got {self.amplitude!r}")
        if not 0 < self.flat_fraction < 1:
            raise ValueError(f"flat_fraction must lie in (0, 1), got {self.flat_fraction!r}")

    @property
    def effective_flat_fraction(self):
        """Fraction of t_p spent at f = 1 (zero for the sine family)."""
        if self.shape is Shape.TRAPEZOID:
            return 0.5
        if self.shape is Shape.SINE_TRAPEZOID:
            return self.flat_fraction
        return 0.0

    def with_(self, **changes):
        return replace(self, **changes)


@numba.njit(cache=True)
def envelope_value(code, t, t_p, flat_fraction):
    if t <= 0.0 or t >= t_p:
        return 0.0
    u = t / t_p
    if code == SINE:
        return math.sin(math.pi * u)
    if code == SINE2:
        s = math.sin(math.pi * u)
        return s * s
    if code == SINE4:
        s = math.sin(math.pi * u)
        s *= s
        return s * s
    w = min(u, 1.0 - u)
    if code == TRAPEZOID:
        return min(w / 0.25, 1.0)
    rise = 0.5 * (1.0 - flat_fraction)
    if w >= rise:
        return 1.0
    return math.sin(0.5 * math.pi * w / rise)


def envelope(spec, t):
    """Evaluate the envelope at scalar or array time ``t`` (ns)."""
    code = spec.shape.code
    if np.ndim(t) == 0:
        return envelope_value(code, float(t), spec.t_p, spec.flat_fraction)
    t = np.asarray(t, dtype=float)
    out = np.empty(t.shape)
    flat = out.reshape(-1)
    for i, ti in enumerate(t.reshape(-1)):
        flat[i] = envelope_value(code, ti, spec.t_p, spec.flat_fraction)
    return out
