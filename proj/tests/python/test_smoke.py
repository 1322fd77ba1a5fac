import json
import math
import os
import pathlib

import pytest

import rbc


def test_version():
    assert rbc.__version__.count(".") == 2


def test_critical_free_free():
    c = rbc.critical_rayleigh("free-free")
    assert c["R_c"] == pytest.approx(27 * math.pi**4 / 4, rel=1e-9)
    assert c["a_c"] == pytest.approx(math.pi / math.sqrt(2), rel=1e-6)
    assert c["certified"]


def test_neutral_and_growth_rate():
    assert rbc.neutral_rayleigh(math.pi, "ff") == pytest.approx(8 * math.pi**4, rel=1e-10)
    c = rbc.critical_rayleigh("rigid-rigid")
    assert abs(rbc.growth_rate(c["R_c"], "rr")) < 1e-6
    assert rbc.growth_rate(1.1 * c["R_c"], "rr") > 0


def test_bad_boundary_condition():
    with pytest.raises(ValueError):
        rbc.critical_rayleigh("sideways")


def test_reduce_free_free():
    rc = 27 * math.pi**4 / 4
    m = rbc.reduce(1.05 * rc, "free-free", L=2 * math.sqrt(2))
    assert m["alpha"] == pytest.approx(1 / (48 * math.sqrt(2)), rel=1e-9)
    assert m["amplitude"] == pytest.approx(math.sqrt(m["beta1"] / m["alpha"]))
    below = rbc.reduce(0.95 * rc, "free-free")
    assert below["beta1"] < 0 and below["amplitude"] == 0


def test_simulate_rolls():
    s = rbc.simulate("rr", ratio=1.05, dt=0.05)
    assert s["steady"]
    assert len(s["t"]) == len(s["r"]) == len(s["M"])
    assert s["final_regime"] == "PureRolls"
    m = rbc.reduce(s["R"], "rr", J=8)
    assert s["r"][-1] == pytest.approx(m["amplitude"], rel=0.1)


def test_sweep_below_onset_is_zero():
    out = rbc.sweep([0.9, 0.95], horizon=2000)
    assert all(p["amplitude"] == 0 for p in out["points"])
    assert out["slope"] is None


def test_classify_template():
    pure = rbc.classify_template("rr")
    assert pure["regime"] == "PureRolls"
    assert pure["centers"] == 2 and pure["boundary_saddles"] == 4
    assert pure["cross_channel"]
    assert not pure["structurally_stable"]["B0"]
    assert pure["structurally_stable"]["B3"]
    bent = rbc.classify_template("rr", shear=0.05)
    assert bent["regime"] == "MeanderB"
    assert not bent["cross_channel"]


def test_run_cli(tmp_path):
    root = pathlib.Path(os.environ.get("RBC_TEST_SCRATCH", tmp_path)) / "cli"
    assert rbc.run_cli(["--output-root", str(root), "critical", "--bc", "ff"]) == 0
    assert rbc.run_cli(["--output-root", str(root), "simulate", "--dt", "-1"]) == 3
    runs = sorted(p for p in root.iterdir() if p.is_dir())
    manifest = json.loads((runs[-1] / "manifest.json").read_text())
    assert manifest["command"] == "critical"
    assert manifest["resolved"]["R_c"] == pytest.approx(27 * math.pi**4 / 4, rel=1e-9)
