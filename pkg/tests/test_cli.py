import json

import numpy as np
import pytest

from dispersion_lab.channel import compound_example
from dispersion_lab.cli import main
from dispersion_lab.vnc import random_centered_lambda


@pytest.fixture
def files(tmp_path):
    rem = tmp_path / "rem1.json"
    rem.write_text(json.dumps(compound_example().to_dict()))
    ident = tmp_path / "id.json"
    ident.write_text(json.dumps({"input_size": 2, "output_size": 2, "w": [[1, 0], [0, 1]]}))
    bsc = tmp_path / "bsc.json"
    bsc.write_text(json.dumps({"w": [[0.9, 0.1], [0.1, 0.9]]}))
    gamma = [0.2, 0.3, 0.1, 0.4]
    g = tmp_path / "gamma.json"
    g.write_text(json.dumps({"gamma": gamma}))
    lam = tmp_path / "lambda.json"
    lam.write_text(json.dumps(random_centered_lambda(gamma, 3, 0).tolist()))
    return {"rem": str(rem), "id": str(ident), "bsc": str(bsc), "gamma": str(g), "lam": str(lam),
            "dir": tmp_path}


def out(files, name):
    return str(files["dir"] / name)


def test_analyze(files, capsys):
    o = out(files, "a.json")
    assert main(["analyze", files["rem"], "-o", o]) == 0
    assert "COMPOUND" in capsys.readouterr().out
    rep = json.load(open(o))
    assert rep["dispersion_class"] == "COMPOUND"
    assert rep["v_min"] == pytest.approx(0.102, abs=1e-3)
    assert json.load(open(o + ".manifest.json"))["command"] == "analyze"


def test_analyze_identity_warns(files, capsys):
    assert main(["analyze", files["id"], "-o", out(files, "i.json")]) == 0
    cap = capsys.readouterr()
    assert "SIMPLE" in cap.out and "V=0" in cap.out
    assert "warning" in cap.err
    assert json.load(open(out(files, "i.json")))["warnings"]


def test_analyze_bad_input(files):
    bad = files["dir"] / "bad.json"
    bad.write_text("{not json")
    assert main(["analyze", str(bad), "-o", out(files, "x.json")]) == 2
    nonstoch = files["dir"] / "ns.json"
    nonstoch.write_text(json.dumps({"w": [[0.5, 0.4], [0.5, 0.5]]}))
    assert main(["analyze", str(nonstoch), "-o", out(files, "x.json")]) == 2
    assert main(["analyze", str(files["dir"] / "missing.json")]) == 2


def test_simulate_and_replay(files):
    o = out(files, "s.csv")
    args = ["simulate", files["rem"], "--controller", '{"variant":"coarse","eps":0.1}',
            "--n", "200", "--trials", "3000", "--seed", "7", "-o", o]
    assert main(args + ["--threads", "1"]) == 0
    lines = open(o).read().splitlines()
    assert lines[0] == "estimate,ci_radius,trials,seed,n,threshold_nats,controller"
    first = open(o, "rb").read()
    assert main(args + ["--threads", "3"]) == 0
    assert open(o, "rb").read() == first
    o2 = out(files, "s2.csv")
    assert main(["replay", o + ".manifest.json", "-o", o2, "--threads", "2", "--check"]) == 0
    assert open(o2, "rb").read() == first


def test_simulate_absolute_and_errors(files):
    ctrl = files["dir"] / "c.json"
    ctrl.write_text(json.dumps({"variant": "constant", "which": "min"}))
    o = out(files, "abs.csv")
    base = ["simulate", files["rem"], "--controller", str(ctrl), "--n", "100", "--seed", "1", "-o", o]
    assert main(base + ["--trials", "1000", "--threshold-mode", "absolute", "--threshold", "1e9"]) == 0
    assert open(o).read().splitlines()[1].startswith("1,")
    assert main(base + ["--trials", "0", "--eps", "0.1"]) == 2
    assert main(base + ["--trials", "10", "--threshold-mode", "absolute"]) == 2
    assert main(base[:-4] + ["-o", o]) == 2  # missing --seed
    odd = ["simulate", files["rem"], "--controller", '{"variant":"coarse","eps":0.1}',
           "--n", "101", "--trials", "10", "--seed", "1", "-o", o]
    assert main(odd) == 2


def test_curve(files):
    o = out(files, "c.csv")
    assert main(["curve", files["rem"], "-o", o]) == 0
    data = np.genfromtxt(o, delimiter=",", names=True)
    assert data.size == 99
    np.testing.assert_allclose(data["thm2_lower"], data["thm4_upper"], atol=1e-12)
    assert main(["curve", files["bsc"], "-o", o]) == 0
    data = np.genfromtxt(o, delimiter=",", names=True)
    np.testing.assert_allclose(data["thm2_lower"], data["no_feedback"], atol=1e-11)
    assert main(["curve", files["rem"], "--eps-grid", "0.5", "-o", o]) == 0
    lines = open(o).read().splitlines()
    assert len(lines) == 2 and lines[1].split(",")[1] == "0"


def test_vnc(files):
    o = out(files, "v.csv")
    assert main(["vnc", files["gamma"], files["lam"], "-o", o]) == 0
    data = np.genfromtxt(o, delimiter=",", names=True)
    assert data["ratio_C"].max() <= 10 * data["ratio_C"].min()
    assert main(["vnc", files["gamma"], files["lam"], "--zetas", "5", "-o", o]) == 2
    assert main(["vnc", files["gamma"], files["lam"], "--zetas", "0.1,0", "-o", o]) == 2


@pytest.mark.parametrize("cmd", [
    ["coin", "--n", "200", "--trials", "3000", "--seed", "1"],
    ["chain", "--n", "400", "--trials", "3000", "--seed", "2", "--deltas", "0.2,0.05"],
    ["sde", "ramp", "--steps", "128", "--trials", "3000", "--seed", "3"],
    ["sde", "bang-bang", "--steps", "128", "--trials", "3000", "--seed", "3", "--offset", "0.2"],
])
def test_sim_commands_replay_bit_exact(files, cmd):
    o = out(files, "r.csv")
    assert main(cmd + ["-o", o, "--threads", "1"]) == 0
    first = open(o, "rb").read()
    for threads in ("2", "4"):
        assert main(["replay", o + ".manifest.json", "-o", out(files, f"r{threads}.csv"),
                     "--threads", threads, "--check"]) == 0
        assert open(out(files, f"r{threads}.csv"), "rb").read() == first


def test_density(files):
    o = out(files, "d.csv")
    assert main(["density", "--points", "5", "-o", o]) == 0
    assert len(open(o).read().splitlines()) == 26


def test_replay_bad_manifest(files):
    bad = files["dir"] / "m.json"
    bad.write_text("{}")
    assert main(["replay", str(bad)]) == 2
