import json
import os

import numpy as np
import pytest

import torsionlab as tl
from torsionlab import cli


@pytest.fixture(autouse=True)
def isolated_cache_env(monkeypatch):
    monkeypatch.delenv("TORSIONLAB_CACHE", raising=False)


@pytest.fixture
def ball_spec(tmp_path):
    path = tmp_path / "ball.json"
    path.write_text(json.dumps(tl.Ball(1.0).spec_dict()))
    return str(path)


@pytest.fixture
def ellipse_spec(tmp_path):
    path = tmp_path / "ellipse.json"
    path.write_text(json.dumps(tl.Ellipse.from_flattening(1.0).spec_dict()))
    return str(path)


def test_version_flag_exits_cleanly(capsys):
    assert cli.run(["--version"]) == 0
    capsys.readouterr()


def test_torsion_json_round_trip(ellipse_spec, tmp_path):
    out = tmp_path / "field.json"
    code = cli.run(["torsion", "--domain", ellipse_spec, "--grid-res", "32",
                    "--out", str(out)])
    assert code == 0
    payload = json.loads(out.read_text())
    assert payload["kind"] == "field"
    field = tl.ScalarField.from_json(json.dumps(payload["field"]))
    direct = tl.grid_torsion(tl.Ellipse.from_flattening(1.0), 32)
    assert np.array_equal(field.values, direct.values)
    assert np.array_equal(field.mask, direct.mask)


def test_torsion_csv_and_polyline(ellipse_spec, tmp_path):
    out = tmp_path / "field.csv"
    assert cli.run(["torsion", "--domain", ellipse_spec, "--grid-res", "32",
                    "--format", "csv", "--out", str(out)]) == 0
    lines = out.read_text().strip().split("\n")
    assert lines[0] == "x,y,value,inside"
    assert len(lines) == 1 + 32 * 64

    svg = tmp_path / "mu.txt"
    assert cli.run(["torsion", "--domain", ellipse_spec, "--grid-res", "32",
                    "--format", "svg-data", "--out", str(svg)]) == 0
    rows = svg.read_text().strip().split("\n")
    assert rows[0] == "# t mu"
    first = rows[1].split()
    assert float(first[0]) == 0.0


def test_asymmetry_command(ball_spec, tmp_path):
    out = tmp_path / "asym.json"
    assert cli.run(["asymmetry", "--domain", ball_spec, "--out", str(out)]) == 0
    payload = json.loads(out.read_text())
    assert payload["kind"] == "asymmetry"
    assert payload["result"]["value"] == 0.0
    csv_out = tmp_path / "asym.csv"
    assert cli.run(["asymmetry", "--domain", ball_spec, "--format", "csv",
                    "--out", str(csv_out)]) == 0
    assert csv_out.read_text().startswith("value,center\n")


def test_deficit_point_closed_form_route(ellipse_spec, tmp_path):
    out = tmp_path / "d.json"
    assert cli.run(["deficit", "--domain", ellipse_spec, "--point", "0,0",
                    "--out", str(out)]) == 0
    payload = json.loads(out.read_text())
    assert payload["kind"] == "deficit"
    assert payload["mode"] == "point"
    assert payload["value"] == pytest.approx(0.2, abs=1e-9)


def test_deficit_point_wos_route(ball_spec, tmp_path):
    out = tmp_path / "d.json"
    assert cli.run(["deficit", "--domain", ball_spec, "--point", "0.3,0",
                    "--wos-paths", "2000", "--out", str(out)]) == 0
    payload = json.loads(out.read_text())
    assert payload["value"] == pytest.approx(0.09, abs=2e-2)


def test_deficit_lp_mode(ellipse_spec, tmp_path):
    out = tmp_path / "d.json"
    assert cli.run(["deficit", "--domain", ellipse_spec, "--p", "inf",
                    "--grid-res", "64", "--out", str(out)]) == 0
    payload = json.loads(out.read_text())
    assert payload["mode"] == "lp"
    assert 0.0 < payload["value"] < 1.0


def test_certify_csv_report(ball_spec, tmp_path):
    out = tmp_path / "cert.csv"
    assert cli.run(["certify", "--theorem", "1", "--domain", ball_spec,
                    "--grid-res", "64", "--format", "csv",
                    "--out", str(out)]) == 0
    lines = out.read_text().strip().split("\n")
    assert lines[0] == "param,theorem,p_or_alpha,lhs,rhs,margin,sigma,passed,seed"
    assert len(lines) == 2
    assert lines[1].endswith("true,0")


def test_sweep_csv_and_polyline(tmp_path):
    csv_out = tmp_path / "sweep.csv"
    argv = ["sweep", "--theorem", "1", "--eps", "0.2,0.4", "--grid-res", "64",
            "--format", "csv", "--out", str(csv_out)]
    assert cli.run(argv) == 0
    lines = csv_out.read_text().strip().split("\n")
    assert len(lines) == 3
    assert lines[1].startswith("0.2,1,")

    svg_out = tmp_path / "sweep.txt"
    argv = ["sweep", "--theorem", "1", "--eps", "0.2,0.4", "--grid-res", "64",
            "--format", "svg-data", "--out", str(svg_out)]
    assert cli.run(argv) == 0
    rows = svg_out.read_text().strip().split("\n")
    assert rows[0] == "# eps deficit"
    assert rows[1].startswith("0.2 ")
    assert rows[2].startswith("0.4 ")


def test_calibrate_command(tmp_path):
    out = tmp_path / "cal.json"
    assert cli.run(["calibrate", "--alpha", "2.0", "--dt", "5e-3",
                    "--wos-paths", "500", "--t-max", "5.0",
                    "--out", str(out)]) == 0
    payload = json.loads(out.read_text())
    assert payload["kind"] == "calibration"
    assert 0.2 < payload["value"] < 0.3
    assert payload["stderr"] > 0.0
    assert payload["paths"] == 500


def test_validation_exit_codes(tmp_path, ellipse_spec):
    assert cli.run(["torsion"]) == 2                       # no domain
    assert cli.run(["torsion", "--domain", "/nonexistent.json"]) == 2
    assert cli.run(["torsion", "--domain", ellipse_spec, "--grid-res", "8"]) == 2
    assert cli.run(["deficit", "--domain", ellipse_spec]) == 2
    assert cli.run(["deficit", "--domain", ellipse_spec, "--point", "zap"]) == 2
    assert cli.run(["certify", "--theorem", "2", "--domain", ellipse_spec]) == 2
    assert cli.run(["sweep", "--theorem", "1", "--eps", ","]) == 2
    assert cli.run(["deficit", "--domain", ellipse_spec, "--point", "0,0",
                    "--format", "svg-data"]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert cli.run(["torsion", "--domain", str(bad)]) == 2


def test_solver_failure_exit_code(tmp_path):
    # a sliver so thin no cell center falls inside
    sliver = tl.Polygon([(0.0, 0.0), (1.0, 1.0), (1.0, 1.000001)])
    spec = tmp_path / "sliver.json"
    spec.write_text(json.dumps(sliver.spec_dict()))
    assert cli.run(["torsion", "--domain", str(spec), "--grid-res", "16"]) == 3


def test_cache_round_trip_and_corruption(ball_spec, tmp_path, capsys):
    cache = tmp_path / "cache"
    out1, out2 = tmp_path / "a.json", tmp_path / "b.json"
    argv = ["certify", "--theorem", "1", "--domain", ball_spec,
            "--grid-res", "64", "--cache-dir", str(cache)]
    assert cli.run(argv + ["--out", str(out1)]) == 0
    entries = [f for f in os.listdir(cache) if f.endswith(".json")]
    assert len(entries) == 1
    assert len(entries[0]) == 64 + 5
    assert cli.run(argv + ["--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    assert len([f for f in os.listdir(cache) if f.endswith(".json")]) == 1

    # breaking the stored entry forces a recompute, with a warning
    (cache / entries[0]).write_text("{\"inputs\": {}, \"payload\": null}")
    capsys.readouterr()
    out3 = tmp_path / "c.json"
    assert cli.run(argv + ["--out", str(out3)]) == 0
    assert "corrupt cache entry" in capsys.readouterr().err
    assert out3.read_bytes() == out1.read_bytes()


def test_cache_env_var_wins(ball_spec, tmp_path, monkeypatch):
    env_cache = tmp_path / "env_cache"
    flag_cache = tmp_path / "flag_cache"
    monkeypatch.setenv("TORSIONLAB_CACHE", str(env_cache))
    argv = ["asymmetry", "--domain", ball_spec, "--cache-dir", str(flag_cache),
            "--out", str(tmp_path / "r.json")]
    assert cli.run(argv) == 0
    assert any(f.endswith(".json") for f in os.listdir(env_cache))
    assert not flag_cache.exists()


def test_cache_key_depends_on_version(ball_spec, tmp_path, monkeypatch):
    cache = tmp_path / "cache"
    argv = ["asymmetry", "--domain", ball_spec, "--cache-dir", str(cache),
            "--out", str(tmp_path / "r.json")]
    assert cli.run(argv) == 0
    monkeypatch.setattr(cli, "__version__", "0.0.0+test")
    assert cli.run(argv) == 0
    entries = [f for f in os.listdir(cache) if f.endswith(".json")]
    assert len(entries) == 2


def test_reports_are_deterministic(ellipse_spec, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    argv = ["certify", "--theorem", "2", "--domain", ellipse_spec, "--p", "2",
            "--grid-res", "64", "--format", "csv"]
    assert cli.run(argv + ["--out", str(a)]) == 0
    assert cli.run(argv + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
