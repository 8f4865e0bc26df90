import json
import os
import subprocess
import sys
import xml.etree.ElementTree as ET

import pytest

from spiralsheet.cli import RunConfig, load_config, load_archive, main
from spiralsheet.core import GridSpec, Params
from spiralsheet.errors import ConfigError


def run(*argv, env=None):
    """Run the CLI in a fresh interpreter; returns (code, stdout, stderr)."""
    proc = subprocess.run([sys.executable, "-m", "spiralsheet", *argv], capture_output=True,
                          text=True, env=env)
    return proc.returncode, proc.stdout, proc.stderr


@pytest.fixture(scope="module")
def solved_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("solve")
    assert main(["solve", "--out", str(out)]) == 0
    return out


def test_config_round_trip(tmp_path):
    cfg = RunConfig(Params(mu=1.5, m=24, tol_outer=3e-11, grid=GridSpec(1e-3, 1e3, 1025, None, -2.5)),
                    out_dir="runs/a", curve_formats=("svg", "csv"), curve_times=(0.0, 1.0, 2.5),
                    suites=("linear", "geometry"), seed=7)
    ini = tmp_path / "a.ini"
    ini.write_text(cfg.to_text())
    assert load_config(ini) == cfg
    js = tmp_path / "a.json"
    js.write_text(json.dumps(cfg.to_dict()))
    assert load_config(js) == cfg


@pytest.mark.parametrize("body,key", [
    ("[params]\nmu = abc\n", "params.mu"),
    ("[params]\nfoo = 1\n", "params.foo"),
    ("[params]\nmu = 0.4\n", "params.mu"),
    ("[grid]\nn_nodes = 3.5\n", "grid.n_nodes"),
    ("[bogus]\nx = 1\n", "bogus"),
])
def test_malformed_config_names_key(tmp_path, capsys, body, key):
    path = tmp_path / "bad.ini"
    path.write_text(body)
    with pytest.raises(ConfigError):
        load_config(path)
    assert main(["solve", "--config", str(path), "--out", str(tmp_path)]) == 1
    assert key in capsys.readouterr().err


def test_usage_error_exits_one():
    code, _, err = run("solve", "--threads", "many")
    assert code == 1 and "usage" in err


def test_default_solve_writes_archive(solved_dir):
    doc = json.loads((solved_dir / "solution.json").read_text())
    assert doc["kind"] == "spiralsheet-solution" and doc["report"]["converged"]
    assert doc["params"]["m"] == 32 and "threads" not in doc["params"]
    s = load_archive(solved_dir / "solution.json")
    assert s.params.m == 32


def test_m2_reports_contraction_failure(tmp_path):
    cfg = tmp_path / "m2.ini"
    cfg.write_text("[params]\nm = 2\n")
    code, out, _ = run("solve", "--config", str(cfg), "--out", str(tmp_path))
    assert code == 2 and "status: contraction failure" in out


def test_export_svg(solved_dir, tmp_path):
    assert main(["export", "--archive", str(solved_dir / "solution.json"), "--t", "1.0",
                 "--format", "svg", "--out", str(tmp_path)]) == 0
    root = ET.parse(tmp_path / "curve_t1.svg").getroot()
    assert len([e for e in root if e.tag.endswith("polyline")]) == 32


def test_field_csv_rows(solved_dir, tmp_path):
    assert main(["field", "--archive", str(solved_dir / "solution.json"), "--window", "-1", "1", "-1", "1",
                 "--resolution", "128", "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "field.csv").read_text().splitlines()
    assert lines[0] == "x,y,vx,vy" and len(lines) - 1 == 16384


def test_check_linear_passes(capsys):
    assert main(["check", "--suite", "linear"]) == 0
    out = capsys.readouterr().out
    assert "PASS" in out and "FAIL" not in out


def test_check_unknown_suite():
    assert main(["check", "--suite", "nope"]) == 1


@pytest.mark.parametrize("command", ["export", "field"])
def test_missing_archive(tmp_path, command):
    assert main([command, "--archive", str(tmp_path / "absent.json")]) == 1


def test_archives_byte_identical(tmp_path):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[params]\nm = 64\n[run]\nseed = 3\n")
    a, b = tmp_path / "a", tmp_path / "b"
    assert run("solve", "--config", str(cfg), "--out", str(a))[0] == 0
    env = {**os.environ, "SPIRALSHEET_THREADS": "2"}
    assert run("solve", "--config", str(cfg), "--out", str(b), env=env)[0] == 0
    assert (a / "solution.json").read_bytes() == (b / "solution.json").read_bytes()
