"""Command-line interface: every subcommand, error paths, determinism."""
import json

import pytest

from addsim.cli import main

SCENARIO = """\
# small synthetic run for fast tests
preset = paper-5
mu = 5, 10
sigma = 0, 5
gen_orders = 8
gen_drugs = 10
gen_k = 2:4
gen_seed = 3
seeds = 0
"""


@pytest.fixture
def scenario(tmp_path):
    p = tmp_path / "run.scenario"
    p.write_text(SCENARIO)
    return p


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_generate(scenario, tmp_path, capsys):
    out = tmp_path / "gen"
    code, stdout, _ = run(capsys, "generate", "--scenario", str(scenario),
                          "--out", str(out))
    assert code == 0
    assert (out / "inventory.csv").exists()
    assert (out / "orders.csv").exists()
    assert (out / "summary.md").exists()
    assert "orders" in stdout


def test_solve_writes_plan(scenario, tmp_path, capsys):
    out = tmp_path / "solve"
    code, stdout, _ = run(capsys, "solve", "--scenario", str(scenario),
                          "--out", str(out), "--mu", "8", "--sigma", "2")
    assert code == 0
    assert "objective:" in stdout
    plan = json.loads((out / "plan.json").read_text())
    assert plan["mu"] == 8 and plan["sigma"] == 2
    assert plan["cycles"]


def test_solve_then_validate(scenario, tmp_path, capsys):
    out = tmp_path / "sv"
    run(capsys, "solve", "--scenario", str(scenario), "--out", str(out))
    code, stdout, _ = run(capsys, "validate", "--scenario", str(scenario),
                          "--plan", str(out / "plan.json"))
    assert code == 0
    assert "all checks passed" in stdout


def test_validate_rejects_tampered_plan(scenario, tmp_path, capsys):
    out = tmp_path / "tamper"
    run(capsys, "solve", "--scenario", str(scenario), "--out", str(out))
    plan_path = out / "plan.json"
    plan = json.loads(plan_path.read_text())
    plan["objective"] += 5.0
    plan_path.write_text(json.dumps(plan))
    code, stdout, stderr = run(capsys, "validate", "--scenario", str(scenario),
                               "--plan", str(plan_path))
    assert code == 1
    assert "violation" in stdout


def test_simulate(scenario, tmp_path, capsys):
    out = tmp_path / "sim"
    code, stdout, _ = run(capsys, "simulate", "--scenario", str(scenario),
                          "--out", str(out), "--layout", "a",
                          "--strategy", "greedy")
    assert code == 0
    results = (out / "results.csv").read_text().splitlines()
    assert results[0].startswith("# scenario_sha256=")
    assert results[1] == "mu,sigma,layout,strategy,mean_time,mean_cycles,improvement"
    assert (out / "per_order.csv").read_text().count("\n") == 8 + 2


def test_simulate_monte_carlo_mode(scenario, tmp_path, capsys):
    out = tmp_path / "mc"
    code, _, _ = run(capsys, "simulate", "--scenario", str(scenario),
                     "--out", str(out), "--mode", "mc", "--seed", "5")
    assert code == 0


def test_compare_layouts_outputs(scenario, tmp_path, capsys):
    out = tmp_path / "cl"
    code, _, _ = run(capsys, "compare-layouts", "--scenario", str(scenario),
                     "--out", str(out))
    assert code == 0
    for name in ("results.csv", "layout_table.csv", "summary.md",
                 "fig_improvement.png", "fig_mean_times.png"):
        assert (out / name).exists(), name
    # PNG magic bytes: the figures are real images
    assert (out / "fig_improvement.png").read_bytes()[:4] == b"\x89PNG"


def test_compare_layouts_byte_identical_reruns(scenario, tmp_path, capsys):
    out1, out2 = tmp_path / "r1", tmp_path / "r2"
    run(capsys, "compare-layouts", "--scenario", str(scenario), "--out", str(out1))
    run(capsys, "compare-layouts", "--scenario", str(scenario), "--out", str(out2))
    for name in ("results.csv", "layout_table.csv"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_compare_strategies(scenario, tmp_path, capsys):
    out = tmp_path / "cs"
    code, _, _ = run(capsys, "compare-strategies", "--scenario", str(scenario),
                     "--out", str(out), "--layout", "a")
    assert code == 0
    summary = (out / "summary.md").read_text()
    assert "dominance chain: PASS" in summary
    assert (out / "fig_strategies.png").exists()
    body = (out / "results.csv").read_text()
    for s in ("optimal", "dp", "greedy", "random"):
        assert s in body


def test_export_lp(scenario, tmp_path, capsys):
    lp = tmp_path / "model.lp"
    code, _, _ = run(capsys, "export-lp", "--scenario", str(scenario),
                     "--lp-out", str(lp))
    assert code == 0
    text = lp.read_text()
    assert text.startswith("\\")            # comment header
    for section in ("Minimize", "Subject To", "Binary", "End"):
        assert section in text
    # stdout variant
    code, stdout, _ = run(capsys, "export-lp", "--scenario", str(scenario))
    assert code == 0 and "Minimize" in stdout


def test_unknown_subcommand_exits_nonzero(capsys):
    with pytest.raises(SystemExit) as e:
        main(["frobnicate"])
    assert e.value.code != 0
    assert "usage" in capsys.readouterr().err


def test_missing_scenario_is_a_clean_error(tmp_path, capsys):
    code, _, stderr = run(capsys, "simulate", "--scenario",
                          str(tmp_path / "nope.scenario"), "--out",
                          str(tmp_path / "o"))
    assert code == 1
    assert stderr.startswith("error:")


def test_bad_scenario_key_is_a_clean_error(tmp_path, capsys):
    bad = tmp_path / "bad.scenario"
    bad.write_text("preset = paper-5\nwarp_speed = 9\n")
    code, _, stderr = run(capsys, "simulate", "--scenario", str(bad),
                          "--out", str(tmp_path / "o"))
    assert code == 1
    assert "warp_speed" in stderr
