from __future__ import annotations

import json
import math
import subprocess
import sys

import numpy as np
import pytest

from spinwire import cli
from spinwire.errors import ManifestError
from spinwire.io import RunConfig, format_value, read_csv, render_csv


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def body(text):
    return [line for line in text.splitlines() if not line.startswith("#")]


def test_format_value():
    assert format_value(0.1) == "0.10000000000000001"
    assert format_value(np.float64(1.0)) == "1"
    assert format_value(np.int64(7)) == "7"
    assert format_value(True) == "1"
    assert format_value(float("nan")) == "nan"
    assert float(format_value(math.pi)) == math.pi


def test_csv_round_trip(tmp_path):
    text = render_csv(["a", "b"], [(1, 0.1), (2, 1 / 3)], "ab" * 32)
    assert "\r" not in text and text.endswith("\n")
    path = tmp_path / "x.csv"
    path.write_text(text)
    header, rows, digest = read_csv(path)
    assert header == ["a", "b"] and digest == "ab" * 32
    assert float(rows[1][1]) == 1 / 3


def test_manifest_round_trip(tmp_path):
    cfg = RunConfig("sweep", 42, {"n": [10, 20], "eps": 0.1, "family": "pst-linear"})
    path = tmp_path / "m.json"
    cfg.save(path)
    back = RunConfig.load(path)
    assert back == cfg and back.digest() == cfg.digest()


@pytest.mark.parametrize(
    "text,fragment",
    [
        ('{"command": "x", "params": {}}', "seed"),
        ('{"command": "x", "seed": -1, "params": {}}', "seed"),
        ('{"command": "x", "seed": 1, "params": 3}', "params"),
        ('{"command": "x", "seed": 1, "params": {}, "version": 9}', "version"),
        ('{"command": "x",\n "seed": 1,,}', "line 2"),
        ("[1, 2]", "object"),
    ],
)
def test_corrupt_manifest(text, fragment):
    with pytest.raises(ManifestError, match=fragment):
        RunConfig.from_text(text)


def test_build_chain_homogeneous(capsys):
    code, out, err = run(capsys, "build-chain", "--family", "homogeneous", "--n", "4")
    assert code == 0
    assert out.startswith("# manifest-sha256: ")
    assert body(out) == ["i,J_i", "1,1", "2,1", "3,1"]
    assert len(err.strip().splitlines()) == 1


def test_build_chain_json(capsys):
    code, out, _ = run(capsys, "build-chain", "--family", "ost-weak", "--n", "5", "--alpha", "0.5", "--format", "json")
    doc = json.loads(out)
    assert doc["couplings"] == [0.5, 1, 1, 0.5] and "manifest_sha256" in doc


@pytest.mark.parametrize(
    "argv",
    [
        ["build-chain", "--family", "homogeneous", "--n", "1"],
        ["build-chain", "--family", "ost-weak", "--n", "5"],
        ["build-chain", "--family", "nope", "--n", "5"],
        ["build-chain", "--family", "homogeneous", "--n", "5", "--bogus"],
        ["ensemble", "--family", "pst-linear", "--n", "10", "--eps", "-0.1"],
        ["ensemble", "--family", "pst-linear", "--n", "10", "--eps", "0.1", "--nav", "0"],
        ["evolve", "--family", "pst-linear", "--n", "10", "--tmax", "soon"],
        ["sweep", "--family", "pst-linear"],
    ],
)
def test_usage_errors_exit_2(capsys, argv):
    with pytest.raises(SystemExit) as info:
        cli.main(argv)
    assert info.value.code == 2


def test_module_error_exits_1(capsys, tmp_path):
    bad = tmp_path / "g.csv"
    bad.write_text("x,y\n1,2\n")
    code, _, err = run(capsys, "contours", "--grid", str(bad))
    assert code == 1 and err.startswith("spinwire: error: SpinwireError")


def test_synthesize_and_report(capsys, tmp_path):
    rep = tmp_path / "r.json"
    code, out, _ = run(capsys, "synthesize", "--n", "9", "--exponent", "2", "--report", str(rep))
    assert code == 0
    doc = json.loads(rep.read_text())
    assert doc["spectral_residual"] < 1e-10 and doc["symmetry_residual"] == 0
    assert len(body(out)) == 9


def test_spectrum_columns(capsys):
    _, out, _ = run(capsys, "spectrum", "--family", "pst-linear", "--n", "6")
    lines = body(out)
    assert lines[0] == "k,E_k,P_k1" and len(lines) == 7
    assert math.fsum(float(l.split(",")[2]) for l in lines[1:]) == pytest.approx(1.0)


def test_evolve_auto(capsys):
    _, out, _ = run(capsys, "evolve", "--family", "pst-linear", "--n", "50", "--tmax", "auto")
    rows = np.array([[float(x) for x in l.split(",")] for l in body(out)[1:]])
    assert rows[0, 2] == pytest.approx(0.5)
    assert rows[:, 2].max() == pytest.approx(1.0, abs=1e-5)
    assert rows[np.argmax(rows[:, 2]), 0] == pytest.approx(50 * math.pi / 4, rel=1e-3)


def test_transfer_time_report(capsys):
    _, out, _ = run(capsys, "transfer-time", "--family", "pst-linear", "--n", "100")
    fields = dict(kv.split("=") for kv in out.strip().split(","))
    assert float(fields["tau"]) == pytest.approx(25 * math.pi, rel=1e-12)
    assert float(fields["f_at_tau"]) == pytest.approx(1.0, abs=1e-12)
    assert float(fields["window_width"]) > 0
    assert len(fields["manifest_sha256"]) == 64


def test_transfer_time_scan_from_zero(capsys):
    _, out, _ = run(capsys, "transfer-time", "--family", "pst-linear", "--n", "20", "--scan-from-zero", "--tmax", "30")
    fields = dict(kv.split("=") for kv in out.strip().split(","))
    assert float(fields["tau"]) == pytest.approx(5 * math.pi, rel=1e-7)


def test_ensemble_threads_do_not_matter(capsys, monkeypatch):
    argv = ["ensemble", "--family", "pst-linear", "--n", "40", "--eps", "0.1", "--nav", "60", "--seed", "5"]
    _, one, _ = run(capsys, "--threads", "1", *argv)
    _, three, _ = run(capsys, "--threads", "3", *argv)
    monkeypatch.setenv("SPINWIRE_THREADS", "2")
    _, env, _ = run(capsys, "--threads", "1", *argv)
    assert json.loads(one) == json.loads(three) == json.loads(env)
    rec = json.loads(one)
    assert set(rec) >= {"Fbar", "SE", "tau", "failures"}


def test_sweep_contours_fit_pipeline(capsys, tmp_path):
    grid = tmp_path / "g.csv"
    man = tmp_path / "m.json"
    ck = tmp_path / "c.jsonl"
    code, _, _ = run(
        capsys, "sweep", "--family", "pst-linear", "--n-grid", "20,30,40", "--eps-min", "0.02",
        "--eps-max", "0.5", "--per-decade", "6", "--nav", "100", "--checkpoint", str(ck),
        "--manifest", str(man), "--out", str(grid),
    )
    assert code == 0
    header, rows, digest = read_csv(grid)
    assert header == ["N", "eps", "Fbar", "SE", "nav"]
    assert digest == RunConfig.load(man).digest()

    again = tmp_path / "g2.csv"
    assert cli.main(["sweep", "--from-manifest", str(man), "--out", str(again)]) == 0
    assert again.read_text() == grid.read_text()

    cont = tmp_path / "c.csv"
    assert cli.main(["contours", "--grid", str(grid), "--levels", "0.95,0.9,0.8", "--out", str(cont)]) == 0
    header, rows, _ = read_csv(cont)
    assert header == ["level", "N", "eps"] and len(rows) == 9
    capsys.readouterr()
    code, out, _ = run(capsys, "fit-scaling", "--contours", str(cont), "--json")
    fit = json.loads(out)
    assert 1.5 < fit["beta"] < 2.3 and fit["c"] > 0

    code, out, _ = run(capsys, "crossing", "--grid-a", str(grid), "--grid-b", str(grid))
    assert code == 0 and body(out) == ["N,eps,F"]


def test_appendix_check(capsys):
    _, out, _ = run(capsys, "appendix-check", "--n", "40")
    lines = body(out)
    assert lines[0] == "l,exact,gaussian,fig9_transform_exact,fig9_transform_gauss"
    centre = lines[21].split(",")
    assert float(centre[1]) == math.comb(40, 20) / 2**40
    assert centre[3] == "0"


def test_console_script_entry():
    res = subprocess.run(
        [sys.executable, "-m", "spinwire.cli", "build-chain", "--family", "homogeneous", "--n", "3"],
        capture_output=True, text=True, check=True,
    )
    assert body(res.stdout) == ["i,J_i", "1,1", "2,1"]
