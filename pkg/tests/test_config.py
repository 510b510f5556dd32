import pytest
from hypothesis import given, settings, strategies as st

from qrl.config import RunConfig, parse_axis, parse_config
from qrl.errors import ConfigTypeError, InvariantViolation, UnknownKey


def test_empty_gives_baseline_defaults():
    cfg = parse_config("")
    assert cfg == RunConfig()
    assert (cfg.a0, cfg.D, cfg.ell, cfg.ej_ns) == (0.81, 0.6933, 3.71, 5310.0)
    assert (cfg.dx, cfg.dt, cfg.c, cfg.d) == (0.01, 1e-4, -3.0, 797.0)


def test_long_sine_trapezoid_selected():
    cfg = parse_config("shape = sine_trapezoid\nflat_fraction = 0.75")
    assert cfg.pulse().shape.value == "sine_trapezoid"
    assert cfg.pulse().flat_fraction == 0.75


def test_bad_shape_names_key():
    with pytest.raises(InvariantViolation) as exc:
        parse_config("shape = rectangle")
    assert exc.value.key == "shape" and exc.value.line == 1


def test_unknown_key_reports_line():
    with pytest.raises(UnknownKey) as exc:
        parse_config("# comment\nA = 0.03\nfoo = 1\n")
    assert exc.value.key == "foo" and exc.value.line == 3


def test_type_and_invariant_errors():
    with pytest.raises(ConfigTypeError) as exc:
        parse_config("dt = fast")
    assert exc.value.key == "dt"
    with pytest.raises(InvariantViolation) as exc:
        parse_config("t_p = 1\ndt = -1")
    assert exc.value.key == "dt" and exc.value.line == 2
    with pytest.raises(InvariantViolation):
        parse_config("sweep.A = 0.03, -0.01")
    with pytest.raises(InvariantViolation):
        parse_config("mode = sweep")


def test_overrides_win_over_file():
    cfg = parse_config("A = 0.03\nt_p = 5", ["A=0.031"])
    assert cfg.A == 0.031 and cfg.t_p == 5.0
    with pytest.raises(UnknownKey):
        parse_config("", ["nope=1"])


def test_axes():
    assert parse_axis("t_p", "2:14:7") == (2.0, 4.0, 6.0, 8.0, 10.0, 12.0, 14.0)
    assert parse_axis("A", "0.03, 0.032") == (0.03, 0.032)
    assert parse_axis("shape", "sine, sine_trapezoid") == ("sine", "sine_trapezoid")
    with pytest.raises(UnknownKey):
        parse_axis("ell", "1, 2")
    cfg = parse_config("sweep.t_p = 2, 4\nsweep.A = 0.03:0.034:3\nmode = sweep")
    assert [a for a, _ in cfg.sweep] == ["t_p", "A"]


finite = dict(allow_nan=False, allow_infinity=False)


@settings(max_examples=60, deadline=None)
@given(
    a=st.floats(0, 0.05, **finite), tp=st.floats(0.1, 30, **finite), d_cap=st.floats(0.1, 3, **finite),
    shape=st.sampled_from(["sine", "sine2", "sine4", "trapezoid", "sine_trapezoid"]),
    flat=st.floats(0.05, 0.95, **finite), stride=st.integers(1, 1000),
    sweep=st.lists(st.floats(1, 20, **finite), min_size=1, max_size=4),
    dscan=st.lists(st.floats(0.3, 3, **finite), max_size=3),
)
def test_echo_round_trip(a, tp, d_cap, shape, flat, stride, sweep, dscan):
    cfg = RunConfig(A=a, t_p=tp, D=d_cap, shape=shape, flat_fraction=flat, observer_stride=stride,
                    sweep=(("t_p", tuple(sweep)),), dscan_D=tuple(dscan))
    assert parse_config(cfg.to_text()) == cfg
