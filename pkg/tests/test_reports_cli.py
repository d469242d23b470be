import csv
import hashlib
import json

import numpy as np
import pytest

from amlab import cli, reports
from amlab.polytope import Polytope


def pendulum_cfg(**extra):
    cfg = {
        "schema": cli.SCHEMA,
        "lagrangian": "pendulum",
        "grid": {"N": 40, "tau": 0.1},
        "c_scan": {"lo": [-1.0], "hi": [1.0], "step": 0.25},
    }
    cfg.update(extra)
    return cfg


def write_cfg(tmp_path, text):
    p = tmp_path / "run.json"
    p.write_text(text)
    return p


# ------------------------------------------------------------- formatting


def test_fmt_and_json():
    assert reports.fmt(-0.0) == "0.0"
    assert reports.fmt(0.1) == "0.1"
    assert reports.fmt(np.int64(3)) == "3"
    assert reports.fmt(True) == "1"
    obj = {"b": np.float64(1.5), "a": Polytope([[0.0], [1.0]]), "n": float("nan")}
    text = reports.dumps(obj)
    assert text.endswith("\n")
    back = json.loads(text)
    assert list(back) == ["a", "b", "n"]
    assert back["a"] == {"vertices": [[0.0], [1.0]], "dim": 1} and back["n"] == "nan"


# ----------------------------------------------------------------- config


def test_config_syntax_error_has_line(tmp_path):
    p = write_cfg(tmp_path, '{\n  "schema": "amlab-run/1",\n  "grid": {"N": 40,,}\n}')
    with pytest.raises(cli.ConfigError) as exc:
        cli.load_config(p)
    assert exc.value.line == 3


def test_config_bad_value_names_field_and_line(tmp_path):
    text = json.dumps(pendulum_cfg(grid={"N": 40, "tau": -0.1}), indent=2)
    p = write_cfg(tmp_path, text)
    with pytest.raises(cli.ConfigError) as exc:
        cli.load_config(p)
    assert exc.value.field == "grid.tau"
    assert '"tau"' in text.splitlines()[exc.value.line - 1]


def test_config_unknown_preset(tmp_path):
    p = write_cfg(tmp_path, json.dumps(pendulum_cfg(lagrangian="nope")))
    with pytest.raises(cli.ConfigError, match="lagrangian"):
        cli.load_config(p)


def test_overrides():
    cfg = cli.apply_overrides(pendulum_cfg(), ["grid.N=64", "lagrangian=flat2", "expect.x.y=[1, 2]"])
    assert cfg["grid"]["N"] == 64 and cfg["lagrangian"] == "flat2"
    assert cfg["expect"]["x"]["y"] == [1, 2]
    with pytest.raises(cli.ConfigError):
        cli.apply_overrides(pendulum_cfg(), ["grid.N"])


def test_scan_points():
    cfg = cli.RunConfig({"s": {"lo": [-1.0, -1.0], "hi": [1.0, 1.0], "step": 0.5, "radius": 1.0}})
    pts = cli.scan_points(cfg, "s", 2)
    assert len(pts) == 13 and np.all(np.linalg.norm(pts, axis=1) <= 1.0 + 1e-12)


# ------------------------------------------------------------------- runs


def test_alpha_run_writes_files_and_manifest(tmp_path):
    res = cli.run(pendulum_cfg(expect={"flat_width": {"value": 2.5464790894703255, "rel": 0.2}}), "alpha", tmp_path)
    assert res.exit_code == cli.EXIT_OK
    rows = list(csv.reader((tmp_path / "alpha.csv").open()))
    assert rows[0] == ["c1", "alpha", "converged"] and len(rows) == 10
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert man["status"] == "ok" and man["command"] == "alpha"
    for f in man["files"]:
        data = (tmp_path / f["name"]).read_bytes()
        assert f["bytes"] == len(data) and f["sha256"] == hashlib.sha256(data).hexdigest()


def test_tolerance_failure_exit_code(tmp_path):
    res = cli.run(pendulum_cfg(expect={"flat_width": {"value": 1.0, "rel": 0.01}}), "alpha", tmp_path)
    assert res.exit_code == cli.EXIT_TOLERANCE
    assert res.manifest.status == "tolerance-failed"


def test_stage_error_is_structured(tmp_path):
    # N = 40 with tau = 0.005 cannot reach a neighbour
    res = cli.run(pendulum_cfg(grid={"N": 40, "tau": 0.005}), "alpha", tmp_path)
    assert res.exit_code == cli.EXIT_STAGE
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert man["status"] == "error" and man["error"]["stage"] == "discretize"
    assert "no neighbour" in man["error"]["message"]


def test_main_exit_codes(tmp_path, capsys):
    good = write_cfg(tmp_path, json.dumps(pendulum_cfg()))
    assert cli.main(["alpha", "--config", str(good), "--out", str(tmp_path / "o")]) == 0
    assert "alpha: ok" in capsys.readouterr().out
    assert cli.main(["alpha", "--config", str(tmp_path / "missing.json")]) == cli.EXIT_CONFIG
    bad = tmp_path / "bad.json"
    bad.write_text('{"schema": "other"}')
    assert cli.main(["alpha", "--config", str(bad)]) == cli.EXIT_CONFIG
    assert "field 'schema'" in capsys.readouterr().err


def test_rerun_is_byte_identical(tmp_path):
    cfg = pendulum_cfg(h_scan={"lo": [-0.5], "hi": [0.5], "step": 0.25})
    a = cli.run(cfg, "beta", tmp_path / "a")
    b = cli.run(cfg, "beta", tmp_path / "b")
    assert a.manifest.files == b.manifest.files
    for f in a.manifest.files:
        assert (tmp_path / "a" / f["name"]).read_bytes() == (tmp_path / "b" / f["name"]).read_bytes()


def test_mather_and_aubry_commands(tmp_path):
    cfg = pendulum_cfg(h=[0.0], c=[0.0], tolerances={"tol_A": 0.001})
    m = cli.run(cfg, "mather", tmp_path / "m")
    assert m.exit_code == 0 and (tmp_path / "m" / "mather_edges.csv").exists()
    a = cli.run(cfg, "aubry", tmp_path / "a")
    assert a.exit_code == 0
    rows = list(csv.DictReader((tmp_path / "a" / "aubry.csv").open()))
    assert [r["x1"] for r in rows if r["in_aubry"] == "1"] == ["0.0"]
