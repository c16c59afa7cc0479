import csv
import json
import math

import jsonschema
import numpy as np
import pytest

from pbernoulli.cli import ConfigError, ExperimentManifest, load_config, main
from pbernoulli.grid import ScalarField2D
from pbernoulli.schemas import RESULT_SCHEMAS, SUMMARY

STRIP_CONFIG = """\
# strip problem on the unit square
p = 2.0
Lambda = 3.0
half_side = 0.5
center = 0.5, 0.5
datum = strip
datum.a = 1.0
datum.b = 1.0
n = 64
momentum = 0.5
"""


def summary(out):
    data = json.loads((out / "summary.json").read_text())
    jsonschema.validate(data, SUMMARY)
    if data["command"] in RESULT_SCHEMAS:
        jsonschema.validate(data["result"], RESULT_SCHEMAS[data["command"]])
    return data


def run(args, out):
    return main([*args, "--out", str(out)])


@pytest.fixture
def strip_cfg(tmp_path):
    path = tmp_path / "strip.cfg"
    path.write_text(STRIP_CONFIG)
    return path


def test_load_config(strip_cfg, tmp_path):
    spec, cfg = load_config(strip_cfg)
    assert spec.p == 2.0 and spec.Lambda == pytest.approx(3.0)
    assert spec.datum.family == "strip" and spec.center == (0.5, 0.5)
    assert cfg.n == 64 and cfg.momentum == 0.5
    bad = tmp_path / "bad.cfg"
    bad.write_text("p = 2\nLambda = 1\nbogus = 3\n")
    with pytest.raises(ConfigError):
        load_config(bad)
    bad.write_text("Lambda = 1\n")
    with pytest.raises(ConfigError):
        load_config(bad)
    bad.write_text("p = two\nLambda = 1\n")
    with pytest.raises(ConfigError):
        load_config(bad)


def test_manifest_resolution():
    ExperimentManifest("minimize", None, "out", resolution=256)
    for n in (32, 100, 2048):
        with pytest.raises(ConfigError):
            ExperimentManifest("minimize", None, "out", resolution=n)


def test_minimize_outputs(strip_cfg, tmp_path):
    out = tmp_path / "run"
    assert run(["minimize", "--config", str(strip_cfg)], out) == 0
    data = summary(out)
    assert data["status"] == "ok" and all(c["passed"] for c in data["checks"])
    assert {"field.csv", "history.csv", "free_boundary.csv"} <= set(data["artifacts"])
    u = ScalarField2D.from_csv(out / "field.csv")
    assert u.shape == (65, 65)


def test_minimize_is_byte_deterministic(strip_cfg, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(["minimize", "--config", str(strip_cfg)], a) == 0
    assert run(["minimize", "--config", str(strip_cfg)], b) == 0
    for name in ("field.csv", "history.csv", "free_boundary.csv", "summary.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_minimize_missing_config_exits_2(tmp_path):
    assert run(["minimize", "--config", str(tmp_path / "nope.cfg")], tmp_path / "o") == 2
    assert run(["minimize"], tmp_path / "o") == 2


def test_bad_resolution_exits_2(strip_cfg, tmp_path):
    assert run(["minimize", "--config", str(strip_cfg), "--n", "100"], tmp_path / "o") == 2


def test_unknown_command_exits_2(tmp_path):
    assert main(["frobnicate"]) == 2


def test_nonconvergence_exits_3(tmp_path):
    cfg = tmp_path / "short.cfg"
    cfg.write_text(STRIP_CONFIG + "max_iter = 1\nstages = 1\n")
    out = tmp_path / "o"
    assert run(["minimize", "--config", str(cfg)], out) == 3
    data = summary(out)
    assert data["status"] == "numerical_failure" and "error" in data


def test_eigen_table_harmonic(tmp_path):
    out = tmp_path / "t"
    assert run(["eigen", "table", "--omega-grid", "64", "--p", "2"], out) == 0
    with open(out / "eigen_table.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 64
    for r in rows:
        assert abs(float(r["lambda1"]) - math.pi / float(r["omega"])) <= 1e-10
    summary(out)


def test_eigen_table_is_byte_deterministic(tmp_path):
    args = ["eigen", "table", "--omega-grid", "20", "--p-grid", "1.5,2.5,3"]
    assert run(args, tmp_path / "a") == 0 and run(args, tmp_path / "b") == 0
    assert (tmp_path / "a/eigen_table.csv").read_bytes() == (tmp_path / "b/eigen_table.csv").read_bytes()


def test_eigen_table_with_shooting(tmp_path, monkeypatch):
    monkeypatch.setenv("PBERNOULLI_MAX_WORKERS", "1")
    out = tmp_path / "s"
    assert run(["eigen", "table", "--omega-grid", "1.5,3.0", "--p", "2.5", "--shoot"], out) == 0
    assert summary(out)["checks"][-1]["passed"]


def test_eigen_shoot(tmp_path):
    out = tmp_path / "e"
    assert run(["eigen", "shoot", "--omega", str(math.pi / 2), "--p", "2.5"], out) == 0
    data = summary(out)
    assert abs(data["result"]["lambda"] - data["result"]["lambda_closed_form"]) <= 1e-6
    assert run(["eigen", "shoot", "--omega", "7", "--p", "2"], tmp_path / "x") == 2


def test_cone_phi(tmp_path):
    out = tmp_path / "c"
    assert run(["cone", "phi", "--omega", str(math.pi / 2), "--n", "256"], out) == 0
    assert summary(out)["result"]["exponent"] == pytest.approx(4 / 3)


def field_csv(tmp_path, f, n=128, name="u.csv"):
    path, _ = ScalarField2D.on_square(f, n=n).to_csv(tmp_path / name)
    return path


def test_probe_acf(tmp_path):
    path = field_csv(tmp_path, lambda x, y: x)
    out = tmp_path / "a"
    assert run(["probe", "acf", "--field", str(path), "--radii", "0.1,0.2,0.3", "--p", "2"], out) == 0
    data = summary(out)
    assert data["result"]["all_hold"]
    assert (out / "profile.csv").read_text().startswith("r,phi,phi_3r")


def test_probe_acf_check_failure_exits_1(tmp_path):
    path = field_csv(tmp_path, lambda x, y: np.tanh(x / 0.05), n=256)
    out = tmp_path / "f"
    assert run(["probe", "acf", "--field", str(path), "--radii", "0.1", "--p", "2",
                "--x0", "0,0"], out) == 1
    assert summary(out)["status"] == "check_failed"


def test_probe_acf_radius_too_large_exits_2(tmp_path):
    path = field_csv(tmp_path, lambda x, y: x)
    assert run(["probe", "acf", "--field", str(path), "--radii", "0.5", "--p", "2"],
               tmp_path / "o") == 2


def test_probe_flatness(tmp_path):
    poly = tmp_path / "wedge.csv"
    poly.write_text("polyline,x,y\n0,2,0\n0,0,0\n0,0,2\n")
    out = tmp_path / "fl"
    assert run(["probe", "flatness", "--polyline", str(poly), "--radii", "0.5,1",
                "--h0", "0.5"], out) == 0
    data = summary(out)
    for e in data["result"]["entries"]:
        assert abs(e["h"] / e["r"] - 1 / math.sqrt(2)) <= 1e-3 and e["verdict"] == "NonFlat"
    path = field_csv(tmp_path, lambda x, y: x - 0.1)
    assert run(["probe", "flatness", "--field", str(path), "--x0", "0.1,0",
                "--radii", "0.2"], tmp_path / "f2") == 0
    assert run(["probe", "flatness", "--polyline", str(poly), "--radii", "1", "--h0", "2"],
               tmp_path / "f3") == 2


def test_capacity(tmp_path):
    path = field_csv(tmp_path, lambda x, y: (x * x + y * y <= 0.3 ** 2).astype(float), n=64)
    out = tmp_path / "cap"
    assert run(["capacity", "--mask", str(path), "--ell", "2"], out) == 0
    data = summary(out)
    assert data["result"]["value"] > 0
    assert (out / "potential.csv").exists()
    assert run(["capacity", "--mask", str(path), "--ell", "2.5"], tmp_path / "c2") == 2


def test_verify_subset(tmp_path):
    out = tmp_path / "v"
    assert run(["verify", "--only", "1,3"], out) == 0
    data = summary(out)
    assert len(data["checks"]) == 2
    assert json.loads((out / "acceptance.json").read_text())[0]["passed"]
