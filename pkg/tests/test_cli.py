from __future__ import annotations

import io
import json
import subprocess
import sys

import pytest

from tycz_lab.cli import EXIT_FAIL, EXIT_OK, EXIT_USAGE, run


def call(*argv):
    buf = io.StringIO()
    code = run(list(argv), stdout=buf)
    return code, buf.getvalue()


def strip_time(doc: dict) -> dict:
    return {k: v for k, v in doc.items() if k != "timestamp"}


@pytest.mark.parametrize("argv", [
    ["series"], ["series", "--y0", "1.2"], ["solve"], ["limits"], ["invariants"],
    ["tycz", "--model", "projective"], ["tycz", "--model", "hyperbolic", "--n", "3"],
    ["epsilon", "--model", "disc", "--mu", "2"], ["epsilon", "--model", "projective"],
    ["hnorm", "--alpha", "2.5"],
])
def test_passing_commands_emit_envelope(argv):
    code, out = call(*argv)
    doc = json.loads(out)
    assert code == EXIT_OK, [c for c in doc["checks"] if not c["pass"]]
    assert doc["schema"] == 1 and doc["command"] == argv[0] and doc["pass"] is True
    assert {"paper_claim", "computed", "tolerance", "parameters", "results"} <= doc.keys()
    assert doc["parameters"]["seed"] == 0


def test_limits_rows():
    _, out = call("limits")
    rows = {r["claim"]: r for r in json.loads(out)["results"]["limits"]}
    assert rows["lim |R|^2 at 0"]["target"] == 1.5
    assert abs(rows["lim |R|^2 at 0"]["estimate"] - 1.5) < 1e-6


def test_json_is_reproducible():
    a, b = json.loads(call("invariants")[1]), json.loads(call("invariants")[1])
    assert strip_time(a) == strip_time(b)


def test_csv_outputs(tmp_path):
    assert call("invariants", "--format", "csv", "--out", str(tmp_path))[0] == EXIT_OK
    text = (tmp_path / "invariants.csv").read_text()
    assert text.splitlines()[0] == "r,R2,dR2,d2R2,lapR2,a1,a2,a3,A,B,C"
    assert (tmp_path / "invariants.json").exists()
    call("invariants", "--format", "csv", "--out", str(tmp_path))
    assert (tmp_path / "invariants.csv").read_text() == text
    _, out = call("epsilon", "--format", "csv")
    assert out.splitlines()[0] == "alpha,epsilon"


def test_solve_compare_round_trip(tmp_path):
    call("solve", "--format", "csv", "--out", str(tmp_path))
    code, out = call("solve", "--compare", str(tmp_path / "solve.csv"))
    assert code == EXIT_OK
    assert json.loads(out)["computed"]["matches saved profile"] == 0.0


@pytest.mark.parametrize("argv", [
    ["nope"], ["solve", "--rtol", "-1"], ["limits", "--format", "csv"], ["solve", "--compare", "/no/such/file"],
    ["hnorm", "--alpha", "0.5"], ["limits", "--n", "3"], ["verify-all", "--criteria", "99"],
    ["solve", "--precision", "quad"],
])
def test_usage_errors_exit_3(argv, capsys):
    assert call(*argv)[0] == EXIT_USAGE
    assert "error" in capsys.readouterr().err


def test_unreadable_compare_file(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("not,a,profile\n")
    assert call("solve", "--compare", str(bad))[0] == EXIT_USAGE


def test_bad_thread_env(monkeypatch):
    monkeypatch.setenv("TYCZ_LAB_THREADS", "zero")
    assert call("series")[0] == EXIT_USAGE


def test_verify_all_reports_every_criterion(monkeypatch):
    monkeypatch.setenv("TYCZ_LAB_THREADS", "4")
    code, out = call("verify-all")
    doc = json.loads(out)
    assert sorted({r["criterion"] for r in doc["checks"]}) == list(range(1, 14))
    failing = {r["criterion"] for r in doc["checks"] if not r["pass"]}
    # the Einstein-constant sign convention: see the decisions ledger
    assert failing == {9}
    assert code == EXIT_FAIL
    monkeypatch.setenv("TYCZ_LAB_THREADS", "1")
    assert strip_time(json.loads(call("verify-all")[1]))["checks"] == doc["checks"]


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "tycz_lab", "series", "--order", "12"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["parameters"]["order"] == 12
