import csv

import pytest

from qrl.cli import build_parser, load_config, main
from qrl.config import parse_config

CI = ["--set", "dx=0.05", "--set", "d=200", "--set", "dt=0.001"]


def _rows(path):
    return list(csv.reader(open(path)))


def _masked(path):
    rows = _rows(path)
    col = rows[0].index("wall_seconds")
    return [r[:col] + r[col + 1:] for r in rows]


def test_spectrum_table(tmp_path, capsys):
    assert main(["--mode", "spectrum", "--out", str(tmp_path)]) == 0
    rows = _rows(tmp_path / "spectrum.csv")
    assert len(rows) == 7 and rows[0][0] == "level"
    assert "# levels: 6" in (tmp_path / "manifest.txt").read_text()


def test_single_run_and_manifest_regeneration(tmp_path):
    out = tmp_path / "a"
    assert main(["--mode", "single", "--out", str(out), *CI, "--set", "t_p=0.2", "--set", "A=0.04"]) == 0
    header, row = _rows(out / "results.csv")
    assert header[9:11] == ["p10", "p01"]
    assert (out / "record.txt").read_text().startswith("# readout result")
    again = tmp_path / "b"
    assert main(["--config", str(out / "manifest.txt"), "--out", str(again)]) == 0
    assert _masked(out / "results.csv") == _masked(again / "results.csv")


def test_trace_outputs(tmp_path):
    assert main(["--mode", "trace", "--out", str(tmp_path), *CI, "--set", "t_p=0.2",
                 "--set", "observer_stride=10"]) == 0
    rows = _rows(tmp_path / "trace.csv")
    assert rows[0] == ["t_ns", "P", "Q"] and len(rows) == 22
    assert _rows(tmp_path / "trace_1.csv")[0] == ["t_ns", "norm", "survival"]


def test_halving_dt_changes_error_little(tmp_path):
    n = []
    for dt in ("0.001", "0.0005"):
        out = tmp_path / dt
        assert main(["--out", str(out), *CI, "--set", f"dt={dt}", "--set", "t_p=1", "--set", "A=0.045"]) == 0
        header, row = _rows(out / "results.csv")
        n.append(float(row[header.index("n_err")]))
    assert abs(n[0] - n[1]) < 1e-3


def test_sweep_mode(tmp_path):
    assert main(["--mode", "sweep", "--out", str(tmp_path), *CI, "--set", "t_p=0.05",
                 "--set", "sweep.A=0.03,0.04"]) == 0
    assert len(_rows(tmp_path / "results.csv")) == 3
    assert "# argmin: A=" in (tmp_path / "manifest.txt").read_text()


@pytest.mark.parametrize("argv, code, tag", [
    (["--set", "shape=rectangle"], 2, "error[config]"),
    (["--set", "A=0.2", "--set", "t_p=0.01", *CI], 3, "error[no_barrier]"),
    (["--set", "D=40", "--set", "t_p=0.01", *CI], 4, "error[too_few_levels]"),
    (["--config", "/nonexistent/qrl.cfg"], 7, "error[io]"),
])
def test_exit_codes(tmp_path, capsys, argv, code, tag):
    assert main([*argv, "--out", str(tmp_path)]) == code
    assert capsys.readouterr().err.startswith(tag)


def test_workers_env_and_precedence(tmp_path):
    cfg_file = tmp_path / "run.cfg"
    cfg_file.write_text("workers = 2\nA = 0.03\n")
    args = build_parser().parse_args(["--config", str(cfg_file), "--set", "A=0.031"])
    assert load_config(args, {}).workers == 2
    cfg = load_config(args, {"QRL_WORKERS": "5"})
    assert cfg.workers == 5 and cfg.A == 0.031
    assert load_config(build_parser().parse_args(["--mode", "spectrum"]), {}) == parse_config("mode = spectrum")
