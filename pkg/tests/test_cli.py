import json
import math

import numpy as np
import pytest

from sweepsim.cli import main
from sweepsim.convex_sets import contains
from sweepsim.integrator import Trajectory
from sweepsim.scenarios import REGISTRY, get_scenario

REQUIRED = ["example1", "example2", "example2_averaged", "pure_sweep", "interior_ode",
            "fixed_point_monotone"]


def run(tmp_path, *argv, sub="out"):
    out = tmp_path / sub
    return main([*argv, "--out", str(out)]), out


def test_simulate_example1(tmp_path):
    code, out = run(tmp_path, "simulate", "--scenario", "example1", "--eps", "0", "--x0", "0.5",
                    "--t-start", "0", "--t-end", "20", "--step", "1e-3", "--samples", "2000")
    assert code == 0
    tr = Trajectory.from_csv((out / "trajectory.csv").read_text())
    assert len(tr.states) == 20_001
    for t, x in zip(tr.times, tr.states[:, 0]):
        assert math.sin(t) - 1e-9 <= x <= math.sin(t) + 1 + 1e-9
    meta = json.loads((out / "meta.json").read_text())
    assert meta["scenario"]["name"] == "example1"
    assert meta["constants"]["M"] == 2.0
    assert 1.0 <= meta["constants"]["alpha_hat"] <= 1.1


def test_simulate_infeasible_start(tmp_path):
    code, out = run(tmp_path, "simulate", "--scenario", "example1", "--x0", "5")
    assert code == 2
    assert not (out / "trajectory.csv").exists()


def test_simulate_pure_sweep_csv(tmp_path):
    code, out = run(tmp_path, "simulate", "--scenario", "pure_sweep", "--samples", "1000")
    assert code == 0
    lines = (out / "trajectory.csv").read_text().split("\n")
    assert lines[0] == "t,x_1" and lines[-1] == ""
    rows = np.array([[float(v) for v in line.split(",")] for line in lines[1:-1]])
    assert np.max(np.abs(rows[1:, 1] - rows[1:, 0])) <= 1e-12


@pytest.mark.filterwarnings("ignore:overflow encountered")
def test_numerical_failure_exit_code(tmp_path):
    # eps x^2 overflows to inf at the first step
    code, _ = run(tmp_path, "simulate", "--scenario", "example1", "--eps", "1e308",
                  "--samples", "1000", "--t-end", "0.01")
    assert code == 3


@pytest.mark.parametrize("argv", [
    ["simulate", "--scenario", "nope"],
    ["simulate", "--step", "-1"],
    ["simulate", "--t-start", "2", "--t-end", "1"],
    ["simulate", "--eps", "abc"],
    ["response", "--scenario", "example1"],
    ["average", "--scenario", "example1", "--eps-list", "0.1", "--window", "5,10"],
    ["simulate", "--unknown-flag", "1"],
])
def test_config_errors(tmp_path, argv):
    code, _ = run(tmp_path, *argv)
    assert code == 1


def test_config_file_and_flag_override(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"scenario_id": "interior_ode", "h": 0.01, "samples": 1000}))
    code, out = run(tmp_path, "simulate", "--config", str(cfg), "--t-end", "2")
    assert code == 0
    meta = json.loads((out / "meta.json").read_text())
    assert meta["scenario"]["h"] == 0.01 and meta["scenario"]["t_end"] == 2.0
    cfg.write_text(json.dumps({"scenario_id": "interior_ode", "bogus": 1}))
    assert run(tmp_path, "simulate", "--config", str(cfg))[0] == 1


def test_stability_command(tmp_path):
    code, out = run(tmp_path, "stability", "--scenario", "example1", "--t-end", "8",
                    "--starts", "0;1", "--alpha", "1")
    assert code == 0
    rep = json.loads((out / "stability.json").read_text())
    assert rep["gronwall_satisfied"] and rep["fitted_rate"] <= -0.9
    assert (out / "gap.csv").read_text().startswith("t,gap\n")


def test_stability_assertion_failure_still_writes_report(tmp_path):
    # claiming alpha = 5 is more than the dynamics deliver
    code, out = run(tmp_path, "stability", "--scenario", "example1", "--t-end", "8",
                    "--starts", "0;1", "--alpha", "5")
    assert code == 4
    assert json.loads((out / "stability.json").read_text())["gronwall_satisfied"] is False


def test_almost_period_command(tmp_path):
    code, out = run(tmp_path, "almost-period", "--scenario", "example1", "--s-range", "6,7",
                    "--tol", "1e-6")
    assert code == 0
    rep = json.loads((out / "almost_period.json").read_text())
    assert len(rep["periods_found"]) == 1
    assert abs(rep["periods_found"][0] - 2 * math.pi) <= 1e-2


def test_almost_period_none_found_is_assertion_failure(tmp_path):
    code, _ = run(tmp_path, "almost-period", "--scenario", "example1", "--s-range", "2,3",
                  "--tol", "1e-6")
    assert code == 4


def test_average_command(tmp_path):
    code, out = run(tmp_path, "average", "--scenario", "example2", "--eps-list", "0.05,0.025",
                    "--window", "5,10")
    assert code == 0
    rep = json.loads((out / "average.json").read_text())
    assert rep["passed"] and len(rep["sup_gaps"]) == 2


def test_response_and_order_commands(tmp_path):
    code, out = run(tmp_path, "response", "--scenario", "example1", "--eps-list", "0.1,0.05",
                    "--window", "10,20", "--alpha", "1", sub="r")
    assert code == 0
    assert json.loads((out / "response.json").read_text())["passed"]
    code, out = run(tmp_path, "order", "--scenario", "interior_ode", sub="o")
    assert code == 0
    assert abs(json.loads((out / "order.json").read_text())["order"] - 1) <= 0.15


def test_reproducible_outputs(tmp_path):
    argv = ["simulate", "--scenario", "example2", "--eps", "0.1", "--seed", "7",
            "--samples", "2000"]
    run(tmp_path, *argv, sub="a")
    run(tmp_path, *argv, sub="b")
    for name in ("trajectory.csv", "meta.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    run(tmp_path, *argv[:-3], "8", "--samples", "2000", sub="c")
    assert (tmp_path / "a" / "meta.json").read_bytes() != (tmp_path / "c" / "meta.json").read_bytes()


def test_list_scenarios(capsys):
    assert main(["list-scenarios"]) == 0
    text = capsys.readouterr().out
    for name in REQUIRED:
        assert name in text


@pytest.mark.parametrize("name", sorted(REGISTRY))
def test_registry_preflight(name):
    s = get_scenario(name)
    assert contains(s.moving_set(s.t_start), s.x0, 1e-9)
    report = s.moving_set.check(np.linspace(s.t_start, s.t_end, 200))
    assert report["lipschitz_excess"] <= 1e-9 and report["bound_excess"] <= 1e-9


def test_registry_completeness():
    assert set(REQUIRED) <= set(REGISTRY)
