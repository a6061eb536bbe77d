import math
import os
import subprocess
import sys
import xml.etree.ElementTree as ET

import pytest

from lzc import cli, sweep
from lzc.config import ConfigFieldError, load_config
from lzc.plot import nice_ticks, render_svg

BASE = """\
# three-level instance
beta = 1.0
k = 0.5, 2.0     # band strengths
g = 0.6, 0.5
"""
SWEEP = BASE + """\
sweep = g[0]
sweep_start = 0.2
sweep_stop = 0.8
sweep_steps = 3
"""


def write(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_parse_basic():
    cfg = load_config(SWEEP)
    assert cfg.params.beta == 1.0
    assert cfg.mode == "analytic" and cfg.init == "all"
    assert cfg.sweep.values().tolist() == [0.2, 0.5, 0.8]
    assert cfg.params_at(0.5).g.tolist() == [0.5, 0.5]


def test_overrides_take_precedence():
    cfg = load_config(BASE, overrides=["beta=2.5", "mode=numeric", "init=band:2"])
    assert cfg.params.beta == 2.5
    assert cfg.mode == "numeric"
    assert cfg.band_init == 2


def test_difference_sweep_path():
    cfg = load_config(BASE + "sweep = k[1]-k[0]\nsweep_start = 1\nsweep_stop = 3\n"
                             "sweep_steps = 2\n")
    assert cfg.params_at(3.0).k.tolist() == [0.5, 3.5]


def test_log_sweep():
    cfg = load_config(SWEEP.replace("sweep_steps = 3", "sweep_steps = 3\nsweep_scale = log")
                      .replace("sweep_start = 0.2", "sweep_start = 0.1")
                      .replace("sweep_stop = 0.8", "sweep_stop = 10"))
    assert cfg.sweep.values() == pytest.approx([0.1, 1.0, 10.0])


@pytest.mark.parametrize("text,field,line", [
    ("beta = 1\nk =\ng =\n", "k", 2),
    ("beta = 1\nk = 1, 2\ng = 1\n", "g", 3),
    ("beta = -1\nk = 1\ng = 1\n", "beta", 1),
    ("beta = x\nk = 1\ng = 1\n", "beta", 1),
    ("beta = 1\nk = 1\ng = 1\ncolour = red\n", "colour", 4),
    ("beta = 1\nbeta = 2\nk = 1\ng = 1\n", "beta", 2),
    ("beta = 1\nk = 1\ng = 1\nmode = fast\n", "mode", 4),
    ("beta = 1\nk = 1\ng = 1\ninit = band:2\n", "init", 4),
    ("beta = 1\nk = 1\ng = 1\nsweep = g[1]\nsweep_start=0\nsweep_stop=1\nsweep_steps=3\n",
     "sweep", 4),
    ("beta = 1\nk = 1\ng = 1\nsweep = g[0]\nsweep_start=0\nsweep_stop=1\nsweep_steps=1\n",
     "sweep_steps", 7),
    ("beta = 1\nk = 1\ng = 1\nrel_tol = 0.5\n", "rel_tol", 4),
    ("beta = 1\nk = 1\nno equals sign\n", "no", 3),
])
def test_config_errors_name_field_and_line(text, field, line):
    with pytest.raises(ConfigFieldError) as info:
        load_config(text, "bad.cfg")
    assert info.value.field == field
    assert info.value.line == line
    assert f"bad.cfg:{line}: field '{field}'" in str(info.value)


def test_zero_levels_exit_code(tmp_path, capsys):
    path = write(tmp_path, "beta = 1\nk =\ng =\n")
    assert cli.main(["run", path]) == cli.EXIT_CONFIG
    err = capsys.readouterr().err
    assert "field 'k'" in err and "n_levels" in err


def test_missing_file_exit_code(tmp_path):
    assert cli.main(["run", str(tmp_path / "absent.cfg")]) == cli.EXIT_CONFIG


def test_analytic_run_csv(tmp_path):
    path = write(tmp_path, SWEEP)
    out = tmp_path / "out.csv"
    assert cli.main(["run", path, "--csv", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "sweep_value,p00_analytic,p10,p20"
    assert len(lines) == 4
    first = lines[1].split(",")
    assert first[0] == "0.2"
    assert len(first[1].replace("0.", "", 1)) <= 12


def test_single_point_to_stdout(tmp_path, capsys):
    path = write(tmp_path, BASE)
    assert cli.main(["run", path]) == 0
    text = capsys.readouterr().out.splitlines()
    assert text[0] == "sweep_value,p00_analytic,p10,p20"
    assert text[1].startswith("nan,")


def test_csv_is_deterministic(tmp_path):
    path = write(tmp_path, SWEEP + "mode = numeric\n")
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert cli.main(["run", path, "--csv", str(a)]) == 0
    assert cli.main(["run", path, "--csv", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    header = a.read_text().splitlines()[0]
    assert header == ("sweep_value,p00_analytic,p00_numeric,p10,p20,p10_avg,p20_avg,"
                      "err_estimate")


def test_numeric_columns_follow_init():
    cfg = load_config(BASE, overrides=["mode=numeric", "init=band:2"])
    assert sweep.columns(cfg) == ["sweep_value", "p00_analytic", "p10", "p20", "p20_avg",
                                  "err_estimate"]
    cfg = load_config(BASE, overrides=["mode=numeric", "init=level0"])
    assert sweep.columns(cfg) == ["sweep_value", "p00_analytic", "p00_numeric", "p10", "p20",
                                  "err_estimate"]


def test_validate_pass_and_fail(tmp_path, capsys):
    path = write(tmp_path, SWEEP)
    out = tmp_path / "v.csv"
    assert cli.main(["validate", path, "--csv", str(out)]) == cli.EXIT_OK
    report = capsys.readouterr().out
    assert "9/9 checks passed" in report
    code = cli.main(["validate", path, "--csv", str(out), "--set", "tol_p00=1e-15"])
    assert code == cli.EXIT_VALIDATION
    assert "FAIL" in capsys.readouterr().out


def test_numerical_failure_exit_code(tmp_path, capsys):
    path = write(tmp_path, BASE + "mode = numeric\nmax_steps = 5\n")
    assert cli.main(["run", path, "--csv", str(tmp_path / "x.csv")]) == cli.EXIT_NUMERIC
    assert "lzc.propagator" in capsys.readouterr().err


def test_parallel_sweep_matches_serial(tmp_path, monkeypatch):
    cfg = load_config(SWEEP, overrides=["mode=numeric", "init=band:1"])
    serial = sweep.to_csv(sweep.columns(cfg), sweep.run_sweep(cfg, workers=1))
    monkeypatch.setenv("LZC_THREADS", "2")
    assert sweep.thread_limit() == 2
    parallel = sweep.to_csv(sweep.columns(cfg), sweep.run_sweep(cfg))
    assert serial == parallel


def test_thread_limit_env(monkeypatch):
    monkeypatch.setenv("LZC_THREADS", "0")
    assert sweep.thread_limit() == 1
    monkeypatch.setenv("LZC_THREADS", "many")
    with pytest.raises(Exception):
        sweep.thread_limit()


def test_preset_writes_csv_and_svg(tmp_path):
    code = cli.main(["preset", "fig3a", "--out", str(tmp_path), "--set", "sweep_steps=3"])
    assert code == cli.EXIT_OK
    lines = (tmp_path / "fig3a.csv").read_text().splitlines()
    assert lines[0].startswith("sweep_value,p00_analytic,p00_numeric,p10,p20")
    assert [row.split(",")[0] for row in lines[1:]] == ["0", "2", "4"]
    root = ET.parse(tmp_path / "fig3a.svg").getroot()
    assert root.tag.endswith("svg") and root.get("version") == "1.1"
    assert len(root.findall("{http://www.w3.org/2000/svg}polyline")) == 3


def test_help_documents_columns():
    result = subprocess.run([sys.executable, "-m", "lzc.cli", "run", "--help"],
                            capture_output=True, text=True, check=True)
    for column in ("sweep_value", "p00_analytic", "p00_numeric", "p10 .. pN0", "p10_avg",
                   "err_estimate", "LZC_THREADS"):
        assert column in result.stdout


def test_nice_ticks():
    assert nice_ticks(0, 4) == [0, 1, 2, 3, 4]
    assert nice_ticks(0, 1) == [0, 0.2, 0.4, 0.6, 0.8, 1.0]
    ticks = nice_ticks(0.25, 10)
    assert ticks[0] <= 2 and ticks[-1] == 10


def test_render_svg_skips_nan():
    text = render_svg([0, 1, 2], {"a": [0.1, math.nan, 0.3], "b": [0.2, 0.2, 0.2]},
                      markers={"b"}, title="t <1>")
    root = ET.fromstring(text)
    poly = root.find("{http://www.w3.org/2000/svg}polyline")
    assert len(poly.get("points").split()) == 2
    assert "t &lt;1&gt;" in text
