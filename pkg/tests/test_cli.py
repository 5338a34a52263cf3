import json

import numpy as np
import pytest

from pdcontract import pipeline
from pdcontract.cli import main
from pdcontract.scenarios import ScenarioError, builtin_scenarios, load_scenario, scenario_from_dict


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def scenario_file(tmp_path, data, name="s.scenario.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


def test_builtins_cover_every_kind():
    kinds = {load_scenario(p).kind for p in builtin_scenarios()}
    assert kinds == {"standard", "augmented", "distributed", "distributed-ls", "tv", "tv-distributed"}


def test_rates_unit(capsys, data_dir):
    code, out, _ = run(capsys, "rates", "--scenario", str(data_dir / "unit.scenario.json"))
    rep = json.loads(out)
    assert code == 0
    assert rep["c"] == pytest.approx(3 / 44, abs=1e-12)
    assert rep["alpha"] == pytest.approx(2 / 11, abs=1e-12)
    assert rep["lambda_max_P"] == pytest.approx(13 / 11, abs=1e-12)


def test_rates_path2(capsys, data_dir):
    code, out, _ = run(capsys, "rates", "--scenario", str(data_dir / "path2.scenario.json"))
    rep = json.loads(out)
    assert code == 0 and rep["c"] == pytest.approx(1 / 11, abs=1e-12)
    assert rep["lambda2"] == pytest.approx(2) and rep["lambdaN"] == pytest.approx(2)


def test_rates_epsilon_override(capsys, data_dir):
    _, out, _ = run(capsys, "rates", "--scenario", str(data_dir / "unit.scenario.json"), "--epsilon", "0.25")
    assert json.loads(out)["c"] == pytest.approx(3 / 88, abs=1e-12)


def test_rates_convex_names_assumption(capsys, data_dir):
    code, _, err = run(capsys, "rates", "--scenario", str(data_dir / "weak.scenario.json"))
    assert code == 2 and "(A2)" in err and "augmented" in err


def test_rates_kernel_overlap(capsys, tmp_path):
    prob = {"Q": [[1, 0, 0], [0, 0, 0], [0, 0, 0]], "A": [[0, 1, 0]], "b": [0]}
    code, _, err = run(capsys, "rates", "--scenario", scenario_file(tmp_path, {"kind": "augmented", "problem": prob}))
    assert code == 2 and "(A4)" in err


def test_rates_weak_node(capsys, tmp_path):
    prob = {"nodes": [{"Q": [[1]]}, {"Q": [[0]]}]}
    path = scenario_file(tmp_path, {"kind": "distributed", "problem": prob, "graph": [[0, 1]]})
    code, _, err = run(capsys, "rates", "--scenario", path)
    assert code == 2 and "(A6)" in err


def test_input_errors(capsys, tmp_path):
    assert run(capsys, "rates", "--scenario", str(tmp_path / "missing.json"))[0] == 2
    assert run(capsys, "rates", "--scenario", scenario_file(tmp_path, {"kind": "bogus", "problem": {}}))[0] == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(capsys, "rates", "--scenario", str(bad))[0] == 2
    path = scenario_file(tmp_path, {"kind": "distributed", "problem": {"nodes": [{"Q": [[1]]}] * 2}})
    assert run(capsys, "rates", "--scenario", path)[0] == 2
    path = scenario_file(tmp_path, {"kind": "standard", "problem": "nowhere.json"})
    assert run(capsys, "rates", "--scenario", path)[0] == 2
    disconnected = {"kind": "distributed", "problem": {"nodes": [{"Q": [[1]]}] * 4}, "graph": [[0, 1], [2, 3]]}
    assert run(capsys, "rates", "--scenario", scenario_file(tmp_path, disconnected))[0] == 2


def test_scenario_validation():
    with pytest.raises(ScenarioError):
        scenario_from_dict({"kind": "standard"})
    with pytest.raises(ScenarioError):
        scenario_from_dict({"kind": "standard", "problem": {}, "epsilon": 1.5})
    with pytest.raises(ScenarioError):
        scenario_from_dict({"kind": "tv-distributed", "problem": {}})


def test_simulate_standard_converges(capsys, tmp_path, data_dir):
    out = tmp_path / "sim.csv"
    code, _, err = run(capsys, "simulate", "--scenario", str(data_dir / "quadratic.scenario.json"), "--out", str(out))
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "t,weighted_error,euclidean_error,kkt_residual,envelope"
    rows = np.loadtxt(out, delimiter=",", skiprows=1)
    rep = json.loads(err)
    assert rows[-1, 0] == pytest.approx(20 / rep["c"])
    assert rows[-1, 1] <= 1e-6
    assert np.all(rows[:, 1] <= rows[:, 4] * (1 + 1e-6))


def test_simulate_is_deterministic(capsys, tmp_path, data_dir):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    sc = str(data_dir / "path2.scenario.json")
    run(capsys, "simulate", "--scenario", sc, "--out", str(a))
    run(capsys, "simulate", "--scenario", sc, "--out", str(b))
    assert a.read_bytes() == b.read_bytes()
    assert a.read_text().splitlines()[0].endswith("dual_sum_drift,envelope")


def test_simulate_ls_oracle(data_dir):
    sc = load_scenario(data_dir / "ls6.scenario.json")
    header, rows, rep = pipeline.simulate(sc)
    assert rep["max_node_error"] <= 1e-6
    assert rows[:, header.index("dual_sum_drift")].max() <= 1e-9


def test_simulate_from_equilibrium(capsys, tmp_path):
    prob = {"Q": [[1, 0], [0, 1]], "A": [[1, 1]], "b": [2]}
    path = scenario_file(tmp_path, {"kind": "standard", "problem": prob, "initial": [1, 1, -1], "T": 5})
    code, out, _ = run(capsys, "simulate", "--scenario", path)
    rows = np.loadtxt(out.splitlines()[1:], delimiter=",")
    assert code == 0 and np.all(rows[:, 1:4] <= 1e-12)


def test_simulate_json(capsys, data_dir):
    code, out, _ = run(capsys, "simulate", "--scenario", str(data_dir / "unit.scenario.json"),
                       "--format", "json", "--T", "10")
    rep = json.loads(out)
    assert code == 0 and rep["columns"][0] == "t" and len(rep["rows"]) == rep["steps"] + 1


def test_simulate_divergence_keeps_partial_csv(capsys, tmp_path, data_dir):
    out = tmp_path / "div.csv"
    code, _, err = run(capsys, "simulate", "--scenario", str(data_dir / "unit.scenario.json"),
                       "--h", "5", "--T", "500", "--out", str(out))
    assert code == 1 and "guard" in err
    assert out.read_text().startswith("t,z_0,z_1,z_2")


def test_track_tv(capsys, tmp_path, data_dir):
    out = tmp_path / "track.csv"
    code, _, _ = run(capsys, "track", "--scenario", str(data_dir / "tv.scenario.json"), "--out", str(out))
    lines = out.read_text().splitlines()
    assert code == 0
    assert lines[0] == "t,weighted_error,bound,margin"
    assert lines[-1].startswith("# max_violation=") and "pass=true" in lines[-1]
    rows = np.loadtxt(lines[1:-1], delimiter=",")
    assert np.all(rows[:, 1] <= rows[:, 2] * (1 + 1e-6) + 10 * 0.01 ** 4)


def test_track_static_degenerate(capsys, tmp_path):
    prob = {"family": "moving-target", "Q": [[2, 0], [0, 1]], "r0": [1, 0], "A": [[1, 1]], "b0": [1],
            "amp_r": 0.0, "amp_b": 0.0}
    path = scenario_file(tmp_path, {"kind": "tv", "problem": prob, "h": 0.02, "T": 20, "initial": [0, 0, 0]})
    header, rows, summary = pipeline.track(load_scenario(path))
    assert summary["tracking_rho"] == 0 and summary["pass"]
    assert np.allclose(rows[:, 2], rows[0, 1] * np.exp(-summary["c"] * rows[:, 0]))


def test_track_rejects_static_kind(capsys, data_dir):
    assert run(capsys, "track", "--scenario", str(data_dir / "unit.scenario.json"))[0] == 2


def test_verify_single(capsys, data_dir):
    code, out, _ = run(capsys, "verify", "--scenario", str(data_dir / "weak.scenario.json"), "--format", "json")
    rep = json.loads(out)
    assert code == 0 and rep["pass"]
    checks = {c["name"]: c for c in rep["checks"]}
    assert checks["euclidean_measure"]["value"] == pytest.approx(0, abs=1e-12)
    assert checks["nonexpansion"]["pass"] and checks["empirical_rate"]["skipped"]
    assert rep["kind"] == "standard" and rep["c"] == 0.0


def test_verify_reports_failures(capsys, data_dir):
    # a step far beyond the stability rule spoils the rate fit; reported as a failed check
    code, out, _ = run(capsys, "verify", "--scenario", str(data_dir / "unit.scenario.json"),
                       "--h", "2.5", "--T", "500", "--format", "json")
    rep = json.loads(out)
    failed = [c["name"] for c in rep["checks"] if not c["pass"]]
    assert code == 1 and not rep["pass"] and failed == ["empirical_rate_over_c"]


def test_verify_distributed_checks(data_dir):
    rep = pipeline.verify(load_scenario(data_dir / "path2.scenario.json"))
    names = {c["name"] for c in rep["checks"] if c["pass"]}
    assert {"RLRt_minus_Lambda", "RRt_minus_I", "VVt_minus_I", "projected_measure", "dual_sum_drift"} <= names
    assert rep["pass"] and rep["c"] == pytest.approx(1 / 11) and rep["lambda2"] == pytest.approx(2)


def test_verify_all(capsys):
    code, out, _ = run(capsys, "verify", "--jobs", "4")
    assert code == 0, out
    assert out.count("[PASS]") == len(builtin_scenarios()) + 1
