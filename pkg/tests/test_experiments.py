import io
import json
import math
from fractions import Fraction

import pytest

from anarchia.errors import DegenerateDenominator, GameFormatError
from anarchia import bounds, lb_generator
from anarchia.experiments import (
    SWEEP_HEADER,
    SweepConfig,
    SweepRow,
    VerifySummary,
    default_repro_dir,
    run_sweep,
    run_verify_suite,
    write_sweep_csv,
)
from anarchia.lb_generator import LBParams
from anarchia.registry import LatencyRegistry

EXPONENTIAL = {"family": "exp_base", "params": [2]}


def test_config_from_dict():
    config = SweepConfig.from_dict({"latency": EXPONENTIAL, "w": "1/2", "n_values": [4, 8]})
    assert config.w == Fraction(1, 2)
    assert config.budget == 8
    assert config.out is None


@pytest.mark.parametrize("data", [
    {"latency": EXPONENTIAL, "n_values": [8, 4]},
    {"latency": EXPONENTIAL, "n_values": []},
    {"latency": EXPONENTIAL, "n_values": [4, 8], "n_max": 6},
    {"latency": {"family": "nope"}, "n_values": [4]},
    {"n_values": [4]},
])
def test_config_validation(data):
    with pytest.raises(GameFormatError):
        SweepConfig.from_dict(data)


def test_config_load_rejects_bad_json(tmp_path):
    path = tmp_path / "sweep.json"
    path.write_text("[", encoding="utf-8")
    with pytest.raises(GameFormatError):
        SweepConfig.load(path)


def test_exponential_sweep_grows(tmp_path):
    config = SweepConfig.from_dict({"latency": EXPONENTIAL, "w": 1, "n_values": [4, 8, 12]})
    rows = run_sweep(config)
    assert [row.n for row in rows] == [4, 8, 12]
    ratios = [row.best_ratio for row in rows]
    assert ratios[0] < ratios[1] < ratios[2]
    assert all(row.best_ratio >= 1.0 for row in rows)
    assert all(row.poa_bound == math.inf for row in rows)

    handle = io.StringIO()
    write_sweep_csv(rows, handle)
    lines = handle.getvalue().splitlines()
    assert lines[0] == ",".join(SWEEP_HEADER)
    assert len(lines) == 4
    assert lines[1].split(",")[3] == "inf"


def test_sweep_is_deterministic():
    config = SweepConfig.from_dict({"latency": {"family": "poly_sum", "params": [0, 0, 1]}, "n_values": [3, 6]})
    assert run_sweep(config) == run_sweep(config)


def test_params_summary(linear):
    params = LBParams(2, 0, 1, 1, 3, 3, 1, 1, Fraction(1, 2), linear)
    row = SweepRow(3, 2.0, 2.5, 2.618, params)
    assert row.params_summary() == "alpha=2;beta=0;gamma=1;delta=1;zeta1=3;zeta2=3;kappa1=1;kappa2=1;w=1/2"
    assert row.to_csv()[0] == "3"


def test_verify_suite_passes_and_is_reproducible():
    first = run_verify_suite(None, seed=42, count=20)
    assert first.ok, first.failures
    assert first.checks["ratio_identity"].passed == 20
    assert first.checks["generator_agreement"].passed >= 1
    second = run_verify_suite(None, seed=42, count=20)
    assert json.dumps(first.to_dict()) == json.dumps(second.to_dict())


def test_verify_suite_reads_the_corpus(tmp_path, game_file):
    corpus = game_file.parent
    summary = run_verify_suite(str(corpus), seed=1, count=0)
    assert summary.corpus_files == ["two_links.json"]
    assert summary.checks["upper_bound_soundness"].passed == 1
    assert summary.to_dict()["status"] == "pass"


def test_verify_suite_rejects_broken_corpus(tmp_path):
    (tmp_path / "broken.json").write_text("{", encoding="utf-8")
    with pytest.raises(GameFormatError, match="broken.json"):
        run_verify_suite(str(tmp_path), seed=1, count=0)
    with pytest.raises(GameFormatError):
        run_verify_suite(str(tmp_path / "missing"), seed=1, count=0)


def test_summary_records_failures():
    summary = VerifySummary(seed=0, count=0)
    summary.record("ratio_identity", True)
    assert summary.ok
    summary.record("ratio_identity", False)
    summary.failures.append({"check": "ratio_identity"})
    assert not summary.ok
    assert summary.to_dict()["checks"]["ratio_identity"] == {"passed": 1, "failed": 1}
    assert summary.to_dict()["status"] == "fail"


def test_quadratic_sweep_stays_bounded():
    f = LatencyRegistry.build("poly_sum", [0, 0, 1])
    config = SweepConfig(latency=f, w=Fraction(1), n_values=[4, 8], budget=8)
    rows = run_sweep(config)
    assert all(math.isfinite(row.poa_bound) for row in rows)
    assert all(row.best_ratio <= row.poa_bound + 1e-6 for row in rows)


def test_suite_skips_games_without_equilibrium(tmp_path, cycling_game_file):
    summary = run_verify_suite(str(cycling_game_file.parent), seed=3, count=0)
    assert summary.ok, summary.failures
    assert summary.skipped_no_equilibrium == 1
    assert summary.checks["ratio_identity"].passed == 1


def test_analysis_errors_become_failures(tmp_path, game_file, monkeypatch):
    def collapsed(game, weights=None):
        raise DegenerateDenominator("Bound denominator collapsed at j=1")

    monkeypatch.setattr(bounds, "game_reports", collapsed)
    monkeypatch.setenv("ANARCHIA_REPRO_DIR", str(tmp_path / "from-env"))
    summary = run_verify_suite(str(game_file.parent), seed=1, count=0)
    assert not summary.ok
    assert summary.checks["upper_bound_soundness"].failed == 1
    failure = summary.failures[0]
    assert failure["source"] == "two_links.json"
    assert failure["reproduction"].startswith(str(tmp_path / "from-env"))
    with open(failure["reproduction"], encoding="utf-8") as handle:
        assert json.load(handle)["failure"]["check"] == "upper_bound_soundness"


def test_repro_dir_defaults(monkeypatch):
    monkeypatch.delenv("ANARCHIA_REPRO_DIR", raising=False)
    assert default_repro_dir() == "repro"
    monkeypatch.setenv("ANARCHIA_REPRO_DIR", "elsewhere")
    assert default_repro_dir() == "elsewhere"
    assert default_repro_dir("given") == "given"


def test_tuned_sweep_never_loses_ratio():
    latency = {"family": "poly_sum", "params": [1, 0, 1]}
    plain = run_sweep(SweepConfig.from_dict({"latency": latency, "n_values": [3, 4]}))
    tuned = run_sweep(SweepConfig.from_dict({"latency": latency, "n_values": [3, 4], "tune_weight": True}))
    for before, after in zip(plain, tuned):
        assert after.best_ratio >= before.best_ratio
    assert tuned[0].best_ratio <= tuned[1].best_ratio
    for row in tuned:
        assert lb_generator.verify_nash(lb_generator.build(row.params)).holds


@pytest.mark.slow
def test_player_budget_sweeps():
    def ratios(family, params):
        config = SweepConfig.from_dict({"latency": {"family": family, "params": params}, "n_values": [8, 16, 32]})
        return [row.best_ratio for row in run_sweep(config)]

    exponential = ratios("exp_base", [2])
    assert exponential[0] < exponential[1] < exponential[2]

    slow = ratios("exp_log_power", [1, 1])
    assert slow[0] <= slow[1] <= slow[2]
    assert slow[2] > slow[0]
    assert slow[2] / slow[0] < exponential[2] / exponential[0]

    for family, params in (("poly_sum", [0, 0, 1]), ("poly_log_product", [[0, 0, 1], [1, 1]])):
        flat = ratios(family, params)
        assert max(flat) <= 1.05 * min(flat), (family, flat)


@pytest.mark.slow
def test_full_size_verify_suite():
    summary = run_verify_suite(None, seed=42, count=500)
    assert summary.ok, summary.failures[:3]
    assert summary.checks["ratio_identity"].passed == 500
    assert summary.checks["generator_agreement"].passed == 50
