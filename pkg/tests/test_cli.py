import csv
import json
import subprocess
import sys

import pytest

from impulsive.cli import RunConfig, main, parse_config_text


def run(capsys, *argv):
    rc = main(list(argv))
    out, err = capsys.readouterr()
    return rc, out, err


def test_cics(capsys, tmp_path):
    path = tmp_path / "traj.csv"
    rc, out, err = run(capsys, "cics", "--nmax", "10", "--out", str(path))
    assert rc == 0
    assert "x(s_N+1/2) >= 1 for N=1..10" in err
    assert json.loads(out)["pass"] is True
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["t", "x", "kind"]
    kinds = [r[2] for r in rows[1:]]
    assert kinds.count("pre_jump") == kinds.count("post_jump") > 0


def test_iiss(capsys):
    rc, out, _ = run(capsys, "iiss", "--delta1", "0.3", "--delta2", "0.2", "--rho2", "id")
    rep = json.loads(out)
    assert rc == 0 and rep["pass"]
    assert rep["x_final"] == pytest.approx(1.0200022093554392, abs=1e-12)
    assert (rep["F"], rep["n1"], rep["N"]) == (3, 2, 4)


def test_simulate_without_impulses_in_window(capsys):
    rc, out, _ = run(capsys, "simulate", "--system", "A", "--gamma", "periodic:2:1", "--t0", "0",
                     "--x0", "2", "--tend", "1", "--input", "zero")
    assert rc == 0 and json.loads(out)["x_final"] == pytest.approx(0.735759, abs=1e-6)


def test_simulate_gammastar_jumps_at_one(capsys):
    rc, out, err = run(capsys, "simulate", "--system", "A", "--gamma", "gammastar", "--t0", "0",
                       "--x0", "2", "--tend", "1", "--input", "zero")
    rep = json.loads(out)
    assert rc == 0 and rep["x_final"] == 1.0 and rep["jumps"] == 1
    assert "x(1) = 1.000000" in err


def test_simulate_from_files(capsys, tmp_path):
    (tmp_path / "g.txt").write_text("1/2\n1\n3/2\n")
    (tmp_path / "u.txt").write_text("piece 0 1 0.5\natom 1 0.25\n")
    rc, out, _ = run(capsys, "simulate", "--system", "B", "--gamma", f"file:{tmp_path/'g.txt'}",
                     "--input", f"file:{tmp_path/'u.txt'}", "--x0", "0", "--tend", "3/2", "--engine", "rk4")
    assert rc == 0 and json.loads(out)["jumps"] == 3


@pytest.mark.parametrize("argv", [
    ["simulate"],
    ["iiss", "--delta1", "-1", "--delta2", "0.2"],
    ["iiss", "--delta1", "0.3"],
    ["simulate", "--tend", "1", "--engine", "euler"],
    ["simulate", "--tend", "1", "--gamma", "weird"],
    ["falsify", "--alpha", "sin"],
    ["bogus"],
])
def test_usage_errors(capsys, argv):
    rc, _, err = run(capsys, *argv)
    assert rc == 2
    assert "usage" in err or "error" in err


def test_config_roundtrip(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    rc, first, _ = run(capsys, "iiss", "--delta1", "0.1", "--delta2", "0.05", "--rho2", "r2",
                       "--dump-config", str(cfg))
    assert rc == 0
    text = cfg.read_text()
    assert "delta1=0.1" in text and "subcommand=iiss" in text
    rc, second, _ = run(capsys, "iiss", "--config", str(cfg))
    assert rc == 0 and first == second


def test_flags_override_config(capsys, tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("# ts run\ndeltas=0.5\n")
    rc, out, _ = run(capsys, "ts", "--config", str(cfg), "--deltas", "0.1")
    assert rc == 0 and [r["delta"] for r in json.loads(out)["details"]["runs"]] == [0.1]


def test_config_errors(capsys, tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("nmax=3\nflavor=mint\n")
    assert run(capsys, "cics", "--config", str(cfg))[0] == 2
    cfg.write_text("subcommand=ts\n")
    assert run(capsys, "cics", "--config", str(cfg))[0] == 2
    with pytest.raises(ValueError):
        parse_config_text("no equals sign")
    with pytest.raises(ValueError):
        RunConfig.build("cics", {"nmax": "0"})


def test_out_dir_env_and_json_file(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("IMPULSIVE_OUT_DIR", str(tmp_path))
    rc, out, _ = run(capsys, "cics", "--nmax", "3", "--out", "sub/t.csv", "--json", "rep.json")
    assert rc == 0 and out == ""
    assert (tmp_path / "sub" / "t.csv").exists()
    assert json.loads((tmp_path / "rep.json").read_text())["pass"] is True


def test_falsify(capsys):
    rc, out, err = run(capsys, "falsify", "--alpha", "r2", "--beta0", "2*r^1")
    rep = json.loads(out)
    assert rc == 0 and rep["violated"] and 3 * rep["delta"] < 0.1353352832366127
    assert "refuted" in err


def test_ubebs_small(capsys):
    rc, out, _ = run(capsys, "ubebs", "--trials", "20", "--seed", "1")
    assert rc == 0 and json.loads(out)["trials"] == 20


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "impulsive", "ts", "--deltas", "0.5"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["pass"] is True
