import json
import math
import subprocess
import sys

import jsonschema
import pytest

from uniformpatrol import cli
from uniformpatrol.serialize import load_schema
from uniformpatrol.stackelberg import solve


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_solve_star(capsys):
    code, out, _ = run(capsys, "solve", "--family", "star", "--n", "3", "--m", "2", "--json")
    assert code == 0
    data = json.loads(out)
    jsonschema.validate(data, load_schema("solve"))
    assert data["value"] == pytest.approx(5 - 2 * math.sqrt(6), abs=1e-9)


def test_solve_human_readable(capsys):
    code, out, _ = run(capsys, "solve", "--family", "circle", "--n", "5", "--m", "5")
    assert code == 0
    assert "value    0.5000000000" in out
    assert "limit    0.5716" in out


def test_solve_csv_curve(capsys):
    code, out, _ = run(capsys, "solve", "--family", "circle", "--n", "5", "--m", "5", "--dmax", "4", "--csv")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "d,pi,reachable"
    assert len(lines) == 6


def test_solve_fix_reflect(capsys):
    code, out, _ = run(capsys, "solve", "--family", "line", "--n", "4", "--m", "3", "--fix-reflect", "--grid", "21", "--json")
    assert code == 0
    assert json.loads(out)["params"]["kappa"] == 1


@pytest.mark.parametrize("ext", ["memory", "vision"])
def test_solve_extension(capsys, ext):
    code, out, _ = run(capsys, "solve", "--extension", ext, "--json")
    assert code == 0
    data = json.loads(out)
    jsonschema.validate(data, load_schema("extension"))
    assert data["discrepancies"]


@pytest.mark.parametrize("argv,expected", [
    (["--family", "line", "--n", "4", "--params", "0.4974,0.4267,1", "--node", "2", "--delay", "2", "--m", "6"], 0.7207),
    (["--family", "circle", "--n", "4", "--params", "0.5", "--node", "1", "--delay", "1", "--m", "3"], 0.5),
    (["--family", "star", "--n", "3", "--params", "0,1", "--node", "1", "--delay", "2", "--m", "2"], 0.0),
    (["--family", "circle", "--n", "5", "--params", "0", "--node", "1", "--delay", "1", "--m", "2"], 0.0),
])
def test_eval(capsys, argv, expected):
    code, out, _ = run(capsys, "eval", *argv)
    assert code == 0
    assert float(out) == pytest.approx(expected, abs=1e-4)


def test_eval_json_schema(capsys):
    code, out, err = run(capsys, "eval", "--family", "circle", "--n", "5", "--params", "0", "--node", "1",
                         "--delay", "1", "--m", "2", "--json")
    data = json.loads(out)
    jsonschema.validate(data, load_schema("eval"))
    assert data["reachable"] is False and data["pi"] == 0
    assert "no attack occurs" in err


@pytest.mark.parametrize("argv", [
    ["eval", "--family", "star", "--n", "3", "--params", "0.5,1", "--node", "1", "--delay", "1", "--m", "2"],
    ["eval", "--family", "star", "--n", "3", "--params", "0.2", "--node", "1", "--delay", "1", "--m", "2"],
    ["eval", "--family", "star", "--n", "3", "--params", "a,b", "--node", "1", "--delay", "1", "--m", "2"],
    ["eval", "--family", "star", "--n", "3", "--params", "0.2,1", "--node", "9", "--delay", "1", "--m", "2"],
    ["eval", "--family", "star", "--n", "3", "--params", "0.2,1", "--node", "1", "--delay", "1", "--m", "1"],
    ["eval", "--family", "mobius", "--n", "3", "--params", "0.2", "--node", "1", "--delay", "1", "--m", "2"],
    ["solve", "--family", "star", "--n", "1", "--m", "2"],
    ["solve", "--family", "star", "--n", "3"],
    ["solve", "--family", "star", "--n", "3", "--m", "2", "--bogus"],
    ["sweep", "--family", "star", "--n", "3", "--m", "2", "--param-grid", "p=0:0.3"],
    ["sweep", "--family", "star", "--n", "3", "--m", "2", "--param-grid", "x=0:0.3:0.1"],
    ["sweep", "--family", "star", "--n", "3", "--m", "2", "--param-grid", "p=0.3:0:0.1"],
    ["sweep", "--family", "star", "--n", "3", "--m", "2", "--param-grid", "p"],
    ["sweep", "--family", "line", "--n", "4", "--m", "2", "--param-grid", "p=0:0.5:0.1"],
    ["table", "--id", "1"],
    ["verify", "--suite", "everything"],
    [],
])
def test_usage_errors_exit_2(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == 2
    assert err.strip()


def test_threads_env(capsys, monkeypatch):
    monkeypatch.setenv("PATROL_THREADS", "zero")
    code, _, err = run(capsys, "solve", "--family", "star", "--n", "3", "--m", "2")
    assert code == 2 and "PATROL_THREADS" in err
    monkeypatch.setenv("PATROL_THREADS", "2")
    code, _, _ = run(capsys, "solve", "--family", "star", "--n", "3", "--m", "2")
    assert code == 0


def test_sweep_param_grid(capsys):
    code, out, _ = run(capsys, "sweep", "--family", "star", "--n", "3", "--m", "2", "--param-grid", "p=0:0.33:0.01")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "n,p,s,value"
    rows = [list(map(float, ln.split(","))) for ln in lines[1:]]
    assert len(rows) == 34
    best = max(rows, key=lambda r: r[3])
    assert best[1] == pytest.approx(0.18, abs=0.011)


def test_sweep_over_sizes(capsys):
    code, out, _ = run(capsys, "sweep", "--family", "star", "--n", "2..8", "--m", "2", "--param-grid", "p=0:0.1:0.05")
    assert code == 0
    assert {ln.split(",")[0] for ln in out.splitlines()[1:]} == {str(n) for n in range(2, 9)}


def test_sweep_delay_curve(capsys):
    code, out, _ = run(capsys, "sweep", "--family", "line", "--n", "4", "--m", "6", "--delay-curve",
                       "--params", "0.4974,0.4267,1", "--node", "1")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "d,pi,reachable"
    vals = [float(ln.split(",")[1]) for ln in lines[1:-1]]
    assert min(vals) == pytest.approx(vals[3])


def test_sweep_away(capsys):
    code, out, _ = run(capsys, "sweep", "--family", "circle", "--n", "4", "--away", "--params", "0.25",
                       "--node", "1", "--dmax", "3")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "t,x_1,x_2,x_3,x_4"
    assert lines[1] == "1,0,0.5,0,0.5"
    assert len(lines) == 4


def test_table_pass(capsys):
    code, out, _ = run(capsys, "table", "--id", "7")
    assert code == 0
    assert "all rows within tolerance" in out


def test_table_json_schema(capsys):
    code, out, _ = run(capsys, "table", "--id", "8", "--json")
    assert code == 0
    jsonschema.validate(json.loads(out), load_schema("table"))


def test_table_exit_code_tracks_tolerance(capsys, monkeypatch):
    from dataclasses import replace

    monkeypatch.setattr(cli, "solve", lambda net, m, cfg=None: replace(solve(net, m, cfg), value=solve(net, m, cfg).value + 0.01))
    code, out, err = run(capsys, "table", "--id", "7")
    assert code == 1
    assert "table 7 m=2: value" in err


def test_simulate_node(capsys):
    code, out, _ = run(capsys, "simulate", "--family", "circle", "--n", "4", "--params", "0.2929", "--node", "1",
                       "--delay", "2", "--m", "2", "--trials", "20000", "--json")
    assert code == 0
    data = json.loads(out)
    jsonschema.validate(data, load_schema("simulate"))
    assert abs(data["p_hat"] - 0.1716) < 4 * data["stderr"]
    assert data["seed"] == 20240601


def test_simulate_is_deterministic(capsys):
    argv = ["simulate", "--variant", "memory", "--params", "0.3,0.22", "--delay", "3", "--trials", "5000", "--json"]
    _, a, _ = run(capsys, *argv)
    _, b, _ = run(capsys, *argv, "--threads", "3")
    assert json.loads(a)["p_hat"] == json.loads(b)["p_hat"]


def test_simulate_vision(capsys):
    code, out, _ = run(capsys, "simulate", "--variant", "vision", "--params", "0.25,0.1667,0.25",
                       "--edge", "attack-center", "--trials", "5000")
    assert code == 0
    assert out.startswith("p_hat=")


def test_simulate_missing_response(capsys):
    code, _, err = run(capsys, "simulate", "--variant", "vision", "--params", "0.25,0.1667,0.25")
    assert code == 2


def test_verify_closed_forms(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "closed-forms", "--json")
    assert code == 0
    data = json.loads(out)
    jsonschema.validate(data, load_schema("verify"))
    assert data["ok"]


def test_verify_failure_exits_1(capsys, monkeypatch):
    from uniformpatrol import reproduce

    monkeypatch.setitem(reproduce.SUITES, "closed-forms", lambda: [reproduce.SuiteCheck("broken", False, "x")])
    code, _, err = run(capsys, "verify", "--suite", "closed-forms")
    assert code == 1
    assert "broken" in err


def test_console_script():
    proc = subprocess.run([sys.executable, "-m", "uniformpatrol.cli", "eval", "--family", "complete", "--n", "4",
                           "--params", "0.3333333333333333", "--node", "1", "--delay", "2", "--m", "4"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert float(proc.stdout) == pytest.approx(19 / 27, abs=1e-12)
