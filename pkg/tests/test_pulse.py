import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qrl.pulse import PulseSpec, Shape, envelope

SHAPES = [
    PulseSpec(Shape.SINE, 0.03, 8.0),
    PulseSpec(Shape.SINE2, 0.03, 8.0),
    PulseSpec(Shape.SINE4, 0.03, 8.0),
    PulseSpec(Shape.TRAPEZOID, 0.03, 8.0),
    PulseSpec(Shape.SINE_TRAPEZOID, 0.03, 8.0, 0.5),
    PulseSpec(Shape.SINE_TRAPEZOID, 0.03, 8.0, 0.75),
]


def test_envelope_examples():
    tp = 6.0
    assert envelope(PulseSpec(Shape.SINE, 0.03, tp), tp / 2) == pytest.approx(1.0)
    assert envelope(PulseSpec(Shape.SINE4, 0.03, tp), tp / 4) == pytest.approx(0.25)
    assert envelope(PulseSpec(Shape.TRAPEZOID, 0.03, tp), tp / 8) == pytest.approx(0.5)
    st_ = PulseSpec(Shape.SINE_TRAPEZOID, 0.03, tp, 0.5)
    assert envelope(st_, tp / 8) == pytest.approx(math.sin(math.pi / 4))
    assert envelope(st_, tp / 8) == pytest.approx(math.sin(2 * math.pi * (tp / 8) / tp))


@pytest.mark.parametrize("spec", SHAPES, ids=lambda s: f"{s.shape.value}-{s.flat_fraction}")
def test_zero_at_and_outside_ends(spec):
    for t in (0.0, spec.t_p, -1.0, spec.t_p + 1e-9, 100.0):
        assert envelope(spec, t) == 0.0


def test_sine_trapezoid_walls_follow_double_frequency_sine():
    spec = PulseSpec(Shape.SINE_TRAPEZOID, 0.03, 4.0, 0.5)
    t = np.linspace(0, 1.0, 41)
    np.testing.assert_allclose(envelope(spec, t), np.sin(2 * np.pi * t / 4.0), atol=1e-14)


def test_long_sine_trapezoid_is_flat_between_eighths():
    spec = PulseSpec(Shape.SINE_TRAPEZOID, 0.03, 8.0, 0.75)
    t = np.linspace(1.0, 7.0, 61)
    assert np.all(envelope(spec, t) == 1.0)
    assert envelope(spec, 0.5) == pytest.approx(math.sin(math.pi / 4))


def test_trapezoid_flat_top_and_linear_ramp():
    spec = PulseSpec(Shape.TRAPEZOID, 0.03, 8.0)
    assert np.all(envelope(spec, np.linspace(2, 6, 21)) == 1.0)
    t = np.linspace(0, 2, 9)
    np.testing.assert_allclose(envelope(spec, t), t / 2, atol=1e-15)


@pytest.mark.parametrize("spec", SHAPES, ids=lambda s: f"{s.shape.value}-{s.flat_fraction}")
def test_range_symmetry_and_continuity(spec):
    t = np.linspace(-0.1, spec.t_p + 0.1, 10_000)
    f = envelope(spec, t)
    assert np.all((f >= 0) & (f <= 1))
    np.testing.assert_allclose(f, envelope(spec, spec.t_p - t), atol=1e-12)
    # steepest wall: sine-trapezoid rise over (1 - flat)/2 of t_p
    delta = spec.t_p * 1e-6
    max_slope = math.pi / (spec.t_p * (1 - spec.effective_flat_fraction)) + 4 / spec.t_p
    jumps = np.abs(envelope(spec, t + delta) - f)
    assert np.all(jumps <= max_slope * delta * (1 + 1e-6) + 1e-15)


@settings(max_examples=200, deadline=None)
@given(u=st.floats(min_value=0.0, max_value=0.5), tp=st.floats(min_value=0.1, max_value=50))
def test_sine_family_ordering(u, tp):
    t = u * tp
    s1, s2, s4 = (envelope(PulseSpec(sh, 0.03, tp), t) for sh in (Shape.SINE, Shape.SINE2, Shape.SINE4))
    assert s1 >= s2 >= s4


@settings(max_examples=200, deadline=None)
@given(u=st.floats(min_value=-0.2, max_value=1.2), flat=st.floats(min_value=0.01, max_value=0.99),
       shape=st.sampled_from(list(Shape)))
def test_bounded_and_symmetric(u, flat, shape):
    spec = PulseSpec(shape, 0.03, 3.0, flat)
    a = envelope(spec, u * 3.0)
    assert 0.0 <= a <= 1.0
    assert a == pytest.approx(envelope(spec, 3.0 - u * 3.0), abs=1e-12)


@pytest.mark.parametrize("bad", [dict(t_p=0.0), dict(t_p=-1.0), dict(amplitude=-0.01), dict(flat_fraction=1.0),
                                 dict(flat_fraction=0.0)])
def test_pulse_spec_rejects_invalid(bad):
    kwargs = dict(shape=Shape.SINE, amplitude=0.03, t_p=5.0, flat_fraction=0.5) | bad
    with pytest.raises(ValueError):
        PulseSpec(**kwargs)


def test_shape_names():
    assert [s.value for s in Shape] == ["sine", "sine2", "sine4", "trapezoid", "sine_trapezoid"]
    with pytest.raises(ValueError):
        PulseSpec("rectangle", 0.03, 5.0)
