import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from boltzlab import cli, verify
from boltzlab.config import OUT_ENV


def run(*argv):
    return cli.main([str(a) for a in argv])


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# -- exponents ------------------------------------------------------------------

def test_exponents_full_regime(capsys):
    assert run("exponents", "--gamma", 1, "--nu", 0.05) == 0
    out = capsys.readouterr().out
    assert "full" in out.lower()
    assert "p1          2.875" in out


def test_exponents_dimension3(capsys, tmp_path):
    assert run("exponents", "--s", 9, "--json", "--out", tmp_path) == 0
    d = json.loads(capsys.readouterr().out)
    assert d["dimension3"]["nu"] == 0.25 and d["dimension3"]["density_regime"] is False
    assert json.loads((tmp_path / "exponents.json").read_text()) == d


def test_exponents_none_regime(capsys):
    assert run("exponents", "--gamma", 1, "--nu", 0.4) == 0
    out = capsys.readouterr().out
    assert "none" in out.lower() and "note[" in out


@pytest.mark.parametrize("argv", [("exponents", "--gamma", 1, "--nu", 0.6),
                                  ("exponents", "--s", 4),
                                  ("exponents", "--s", 9, "--nu", 0.1),
                                  ("exponents", "--gamma", 1),
                                  ("simulate", "--gamma", 1, "--nu", 0.25, "--epsilon", 0.5, "--zeta", 0.1)])
def test_config_errors_exit_2(argv, capsys, tmp_path):
    assert run(*argv, *(("--out", tmp_path) if argv[0] == "simulate" else ())) == cli.EXIT_CONFIG
    assert "config error" in capsys.readouterr().err


def test_argparse_errors_exit_2():
    with pytest.raises(SystemExit) as exc:
        run("simulate", "--scheme", "nope")
    assert exc.value.code == 2


# -- simulate -------------------------------------------------------------------

SIM = ("simulate", "--gamma", 1, "--nu", 0.25, "--epsilon", 0.01, "--zeta", 0.1,
       "--n", 200, "--t-end", 0.2, "--snapshots", "0.1,0.2", "--seed", 5)


def test_simulate_dirac_single_velocity(tmp_path):
    assert run(*SIM, "--law", '{"kind": "dirac", "v0": [1.5, -0.5]}', "--out", tmp_path) == 0
    rows = read_rows(tmp_path / "snapshots.csv")
    assert len(rows) == 3 * 200
    assert {(r["vx"], r["vy"]) for r in rows} == {("1.5", "-0.5")}
    m = json.loads((tmp_path / "manifest.json").read_text())
    assert m["replicas"][0]["arrivals"] > 0 and m["config"]["sim"]["n"] == 200


def test_simulate_rerun_byte_identical(tmp_path):
    assert run(*SIM, "--out", tmp_path / "a") == 0
    assert run(*SIM, "--out", tmp_path / "b") == 0
    assert (tmp_path / "a" / "snapshots.csv").read_bytes() == (tmp_path / "b" / "snapshots.csv").read_bytes()


def test_simulate_replicas_match_single_runs(tmp_path):
    assert run(*SIM, "--replicas", 4, "--out", tmp_path / "all") == 0
    together = {tuple(r.values()) for r in read_rows(tmp_path / "all" / "snapshots.csv")}
    apart = set()
    for k in range(4):
        assert run(*SIM, "--first-replica", k, "--replicas", 1, "--out", tmp_path / f"r{k}") == 0
        apart |= {tuple(r.values()) for r in read_rows(tmp_path / f"r{k}" / "snapshots.csv")}
    assert together == apart


def test_simulate_jobs_match_serial(tmp_path):
    assert run(*SIM, "--replicas", 2, "--out", tmp_path / "s") == 0
    assert run(*SIM, "--replicas", 2, "--jobs", 2, "--out", tmp_path / "p") == 0
    assert (tmp_path / "s" / "snapshots.csv").read_bytes() == (tmp_path / "p" / "snapshots.csv").read_bytes()


def test_output_dir_from_env(tmp_path, monkeypatch):
    monkeypatch.setenv(OUT_ENV, str(tmp_path / "env"))
    assert run(*SIM) == 0
    assert (tmp_path / "env" / "snapshots.csv").exists()


def test_simulate_config_file(tmp_path):
    cfg = {"kernel": {"nu": 0.25, "gamma": 1.0}, "schedule": {"epsilon": 0.01, "zeta": 0.1},
           "sim": {"n": 50, "t_end": 0.1, "scheme": "real"}}
    p = tmp_path / "c.json"
    p.write_text(json.dumps(cfg))
    assert run("simulate", "--config", p, "--out", tmp_path / "o") == 0
    m = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert m["config"]["sim"]["scheme"] == "real"
    assert m["replicas"][0]["accepted"] <= m["replicas"][0]["arrivals"]


# -- analyze --------------------------------------------------------------------

def write_cloud(path, pts, t=1.0, running_max=True):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        cols = ["replica", "t", "particle", "vx", "vy"] + (["running_max"] if running_max else [])
        w.writerow(cols)
        for k, (x, y) in enumerate(pts):
            w.writerow([0, t, k, repr(float(x)), repr(float(y))] + ([repr(float(np.hypot(x, y)))] if running_max else []))


def exponential_cloud(n, seed):
    gen = np.random.default_rng(seed)
    r = gen.gamma(2.0, 1.0, n)
    th = gen.uniform(0, 2 * np.pi, n)
    return np.c_[r * np.cos(th), r * np.sin(th)]


def test_analyze_planted_exponential(tmp_path):
    p = tmp_path / "cloud.csv"
    write_cloud(p, exponential_cloud(100_000, 21), running_max=False)
    assert run("analyze", p, "--lambda-prime", 1, "--out", tmp_path / "o") == 0
    a = json.loads((tmp_path / "o" / "analysis.json").read_text())
    fit = a["snapshots"]["t1"]["spatial_fit"]
    assert abs(fit["slope"] + 1.0) <= 0.05
    assert abs(a["snapshots"]["t1"]["kde_mass"] - 1.0) <= 0.02
    assert (tmp_path / "o" / "density_t1.csv").exists()
    tails = read_rows(tmp_path / "o" / "tails.csv")
    masses = [float(r["tail_mass"]) for r in tails]
    assert masses == sorted(masses, reverse=True)


def test_analyze_missing_column(tmp_path, capsys):
    p = tmp_path / "bad.csv"
    p.write_text("replica,t,particle,vx\n0,1,0,0.5\n")
    assert run("analyze", p, "--out", tmp_path / "o") == cli.EXIT_CONFIG
    assert "vy" in capsys.readouterr().err


def test_analyze_empty_annulus_reports_fit_error(tmp_path, capsys):
    p = tmp_path / "small.csv"
    pts = np.random.default_rng(3).standard_normal((500, 2)) * 0.1
    write_cloud(p, pts, running_max=False)
    assert run("analyze", p, "--out", tmp_path / "o") == 0
    a = json.loads((tmp_path / "o" / "analysis.json").read_text())
    assert "spatial_fit_error" in a["snapshots"]["t1"]
    assert "spatial fit failed" in capsys.readouterr().err


def test_analyze_weights_one_equals_raw(tmp_path):
    p = tmp_path / "cloud.csv"
    write_cloud(p, exponential_cloud(3000, 4))
    cfg = json.dumps({"kernel": {"nu": 0.25, "gamma": 1.0}, "schedule": {"epsilon": 1e-8, "zeta": 0.1}})
    assert run("analyze", p, "--config", cfg, "--out", tmp_path / "o") == 0
    a = json.loads((tmp_path / "o" / "analysis.json").read_text())
    assert a["weighted"] and a["snapshots"]["t1"]["min_weight"] == 1.0
    raw = (tmp_path / "o" / "density_t1.csv").read_bytes()
    assert (tmp_path / "o" / "density_weighted_t1.csv").read_bytes() == raw


def test_simulate_then_analyze(tmp_path):
    assert run(*SIM, "--out", tmp_path) == 0
    assert run("analyze", tmp_path / "snapshots.csv", "--out", tmp_path / "an") == 0
    a = json.loads((tmp_path / "an" / "analysis.json").read_text())
    assert a["weighted"] is True
    assert set(a["snapshots"]) == {"t0", "t0.1", "t0.2"}


# -- verify --------------------------------------------------------------------

def test_verify_only(capsys, tmp_path):
    assert run("verify", "--only", "A2,a3", "--out", tmp_path) == 0
    out = capsys.readouterr().out
    assert "A2 PASS" in out and "A3 PASS" in out and "A1 " not in out
    rep = json.loads((tmp_path / "verify.json").read_text())
    assert rep["passed"] and [c["id"] for c in rep["criteria"]] == ["A2", "A3"]


def test_verify_unknown_criterion():
    assert run("verify", "--only", "A99") == cli.EXIT_CONFIG


def test_verify_failure_exit_3(monkeypatch, capsys):
    def broken(profile, master=verify.SEED):
        return False, {"reason": "forced"}
    monkeypatch.setitem(verify.CRITERIA, "A2", ("forced failure", broken))
    assert run("verify", "--only", "A2") == cli.EXIT_VERIFY
    assert "A2 FAIL" in capsys.readouterr().out


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "boltzlab", "exponents", "--gamma", "1", "--nu", "0.1"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and "w1p" in res.stdout.lower()
