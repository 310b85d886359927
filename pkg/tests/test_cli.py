import json
import math

import pytest
from click.testing import CliRunner

from anarchia.app import cli
from anarchia.errors import DegenerateDenominator


@pytest.fixture
def runner():
    return CliRunner(mix_stderr=False)


def invoke(runner, *args):
    return runner.invoke(cli, list(args), catch_exceptions=False)


def test_version(runner):
    result = invoke(runner, "--version")
    assert result.exit_code == 0
    assert "anarchia" in result.stdout


def test_analyze_linear(runner):
    result = invoke(runner, "analyze", "--family", "poly_sum", "--params", "0,1")
    assert result.exit_code == 0, result.stderr
    data = json.loads(result.stdout)
    assert data["poa_bound"] == pytest.approx((3 + math.sqrt(5)) / 2, abs=1e-5)
    assert data["g_hat"] == pytest.approx(1.25, abs=1e-6)
    assert data["verdict"] == "finite"


def test_analyze_constant(runner):
    result = invoke(runner, "analyze", "--family", "constant", "--params", "5")
    assert result.exit_code == 0, result.stderr
    assert json.loads(result.stdout)["poa_bound"] == pytest.approx(1.0, abs=1e-9)


def test_analyze_exponential_with_scaling(runner):
    result = invoke(runner, "analyze", "--family", "exp_base", "--params", "2", "--scaling", "4,8")
    assert result.exit_code == 0, result.stderr
    data = json.loads(result.stdout)
    assert data["verdict"] == "infinite"
    assert data["poa_bound"] == "inf"
    assert [p["lower_bound"] for p in data["predicted_scaling"]] == [
        pytest.approx(32.0, rel=1e-6), pytest.approx(512.0, rel=1e-6)]


@pytest.mark.parametrize("args", [
    ["--family", "nope"],
    ["--family", "poly_sum", "--params", "0,x"],
    ["--family", "poly_sum", "--params", "0,1", "--w", "0"],
    ["--family", "poly_sum", "--params", "0,1", "--i-values", "3"],
])
def test_analyze_rejects_bad_input(runner, args):
    result = invoke(runner, "analyze", *args)
    assert result.exit_code == 2
    assert result.stdout == ""
    assert "Error:" in result.stderr


def test_brute(runner, game_file):
    result = invoke(runner, "brute", str(game_file))
    assert result.exit_code == 0, result.stderr
    data = json.loads(result.stdout)
    assert data["poa"] == pytest.approx(1.0)
    assert {tuple(s["state"]) for s in data["nash_states"]} == {(0, 1), (1, 0)}


def test_brute_cap(runner, game_file):
    result = invoke(runner, "brute", str(game_file), "--cap", "3")
    assert result.exit_code == 3
    assert "cap is 3" in result.stderr


def test_brute_cap_from_environment(runner, game_file):
    result = runner.invoke(cli, ["brute", str(game_file)], env={"ANARCHIA_CAP": "2"})
    assert result.exit_code == 3


def test_brute_without_equilibrium(runner, cycling_game_file):
    result = invoke(runner, "brute", str(cycling_game_file))
    assert result.exit_code == 4
    assert result.stdout == ""
    assert "no pure Nash equilibrium" in result.stderr


def test_brute_missing_file(runner, tmp_path):
    result = invoke(runner, "brute", str(tmp_path / "missing.json"))
    assert result.exit_code == 2
    assert "missing.json" in result.stderr


TIED = ["--alpha", "2", "--beta", "0", "--gamma", "1", "--delta", "1",
        "--zeta1", "3", "--zeta2", "3", "--kappa1", "1", "--kappa2", "1"]


def test_generate_from_flags(runner, tmp_path):
    out = tmp_path / "inst.json"
    result = invoke(runner, "generate", "--family", "poly_sum", "--params", "0,1", *TIED, "--out", str(out))
    assert result.exit_code == 0, result.stderr
    sidecar = json.loads((tmp_path / "inst.sidecar.json").read_text(encoding="utf-8"))
    assert sidecar["nash"] is True
    assert sidecar["ratio"] == pytest.approx(2.0)
    assert json.loads(result.stdout) == sidecar

    brute = invoke(runner, "brute", str(out))
    assert brute.exit_code == 0, brute.stderr
    assert json.loads(brute.stdout)["worst_nash_cost"] >= 12.0 - 1e-9


def test_generate_needs_every_count(runner, tmp_path):
    result = invoke(runner, "generate", "--family", "poly_sum", "--params", "0,1", "--alpha", "2",
                    "--out", str(tmp_path / "inst.json"))
    assert result.exit_code == 2
    assert "--beta" in result.stderr
    assert not (tmp_path / "inst.json").exists()


def test_generate_rejects_invalid_counts(runner, tmp_path):
    bad = list(TIED)
    bad[bad.index("--zeta2") + 1] = "2"
    result = invoke(runner, "generate", "--family", "poly_sum", "--params", "0,1", *bad,
                    "--out", str(tmp_path / "inst.json"))
    assert result.exit_code == 2


def test_generate_search(runner, tmp_path):
    out = tmp_path / "best"
    result = invoke(runner, "generate", "--family", "exp_base", "--params", "2", "--search", "--n-max", "4",
                    "--out", str(out))
    assert result.exit_code == 0, result.stderr
    assert (tmp_path / "best.sidecar.json").exists()
    data = json.loads(result.stdout)
    assert data["nash"] is True
    assert data["ratio"] >= 1.0


def test_sweep(runner, tmp_path):
    config = tmp_path / "sweep.json"
    out = tmp_path / "sweep.csv"
    config.write_text(json.dumps({"latency": {"family": "exp_base", "params": [2]}, "n_values": [4, 8]}),
                      encoding="utf-8")
    result = invoke(runner, "sweep", str(config), "--out", str(out))
    assert result.exit_code == 0, result.stderr
    lines = out.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "n,best_ratio,predicted_lb,poa_bound,params"
    assert [line.split(",")[0] for line in lines[1:]] == ["4", "8"]


def test_sweep_to_stdout(runner, tmp_path):
    config = tmp_path / "sweep.json"
    config.write_text(json.dumps({"latency": {"family": "poly_sum", "params": [0, 1]}, "n_values": [3]}),
                      encoding="utf-8")
    result = invoke(runner, "sweep", str(config))
    assert result.exit_code == 0, result.stderr
    assert result.stdout.startswith("n,best_ratio")


def test_sweep_bad_config(runner, tmp_path):
    config = tmp_path / "sweep.json"
    config.write_text(json.dumps({"latency": {"family": "exp_base", "params": [2]}, "n_values": [8, 4]}),
                      encoding="utf-8")
    assert invoke(runner, "sweep", str(config)).exit_code == 2


def test_verify_is_reproducible(runner):
    first = invoke(runner, "verify", "--seed", "7", "--count", "10")
    assert first.exit_code == 0, first.stderr
    assert json.loads(first.stdout)["status"] == "pass"
    second = invoke(runner, "verify", "--seed", "7", "--count", "10")
    assert first.stdout == second.stdout


def test_verify_with_corpus(runner, game_file):
    result = invoke(runner, "verify", "--corpus", str(game_file.parent), "--count", "0")
    assert result.exit_code == 0, result.stderr
    assert json.loads(result.stdout)["corpus_files"] == ["two_links.json"]


def test_verify_corrupted_corpus(runner, tmp_path):
    (tmp_path / "bad.json").write_text('{"players": []}', encoding="utf-8")
    result = invoke(runner, "verify", "--corpus", str(tmp_path), "--count", "0")
    assert result.exit_code == 2
    assert "bad.json" in result.stderr


def test_verify_negative_count(runner):
    assert invoke(runner, "verify", "--count", "-1").exit_code == 2


def test_verify_class_table(runner, game_file):
    result = invoke(runner, "verify", "--game", str(game_file))
    assert result.exit_code == 0, result.stderr
    lines = result.stdout.splitlines()
    assert lines[0] == "j,t,k,config,i,lambda,f,g,side,resources"
    assert len(lines) >= 2


def test_verify_failure_writes_reproduction(runner, game_file, tmp_path, monkeypatch):
    def collapsed(game, weights=None):
        raise DegenerateDenominator("Bound denominator collapsed")

    monkeypatch.setattr("anarchia.experiments.bounds.game_reports", collapsed)
    repro = tmp_path / "repro"
    result = runner.invoke(cli, ["verify", "--corpus", str(game_file.parent), "--count", "0"],
                           env={"ANARCHIA_REPRO_DIR": str(repro)})
    assert result.exit_code == 1
    data = json.loads(result.stdout)
    assert data["status"] == "fail"
    assert data["failures"][0]["check"] == "upper_bound_soundness"
    assert "DegenerateDenominator" in data["failures"][0]["detail"]
    written = sorted(p.name for p in repro.iterdir())
    assert written == ["upper_bound_soundness-0.json"]
