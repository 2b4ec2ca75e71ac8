"""
Layer 6 Test — LSMC Engine
Tests the confidence interval, the regression backward pass, the forward
policy replay and the policy statistics of the Monte Carlo cross-check.
"""
import sys
import os

import numpy as np
import pytest

sys.path.append(os.getcwd())

from src.app.exceptions.custom_exceptions import EXIT_CONFIG_ERROR, StatisticsException
from src.app.models.valuation_model import LsmcConfig
from src.app.services.lsmc.lsmc_service import LsmcStorageEngine, confidence_interval, lsmc_value
from tests.lattice_oracle import degenerate_contract, lattice_contract, lattice_value


# ═══════════════════════════════════════════════════════
# 1. Confidence Interval
# ═══════════════════════════════════════════════════════

def test_confidence_interval():
    print("\n1️⃣  Testing Confidence Interval...")
    low, high = confidence_interval(range(1, 11))
    assert low == pytest.approx(3.623, abs=1e-3)
    assert high == pytest.approx(7.377, abs=1e-3)
    assert confidence_interval([2.5, 2.5, 2.5]) == (2.5, 2.5)
    print(f"   ✅ runs 1..10 → ({low:.3f}, {high:.3f})")


def test_confidence_interval_needs_two_runs():
    with pytest.raises(StatisticsException) as exc:
        confidence_interval([1.0])
    assert exc.value.exit_code == EXIT_CONFIG_ERROR


# ═══════════════════════════════════════════════════════
# 2. Backward Pass and Replay
# ═══════════════════════════════════════════════════════

def test_degenerate_contract_is_exact():
    print("\n2️⃣  Testing Regression Backward Pass...")
    spec = degenerate_contract()
    _, model = lattice_contract(sigma=0.6)
    result = LsmcStorageEngine(spec, model, LsmcConfig(n_paths=500, n_runs=2, seed=1)).value()
    expected = -100.0 * np.exp(-model.market.r * spec.time.settlement)
    assert result.value_mean == pytest.approx(expected, abs=1e-10)
    assert result.ci_low == pytest.approx(expected, abs=1e-10)
    assert result.ci_high == pytest.approx(expected, abs=1e-10)
    assert result.out_of_sample_mean == pytest.approx(expected, abs=1e-10)
    print(f"   ✅ Only inaction allowed → v = {result.value_mean:.10f}")


def test_replay_reproduces_backward_cash_flows():
    spec, model = lattice_contract()
    engine = LsmcStorageEngine(spec, model, LsmcConfig(n_paths=2000, n_runs=2, seed=5))
    _, spot = engine.simulate(99)
    policy, dacf = engine.fit(spot)
    replay = engine.replay(policy, spot)
    assert np.allclose(replay.discounted_cash, dacf[spec.start_index], rtol=1e-9, atol=1e-9)
    assert replay.levels.shape == (2000, spec.time.n_exercise + 2)
    assert np.all(replay.levels[:, -1] == replay.levels[:, 1] + replay.steps.sum(axis=1))
    print("   ✅ Forward replay equals the backward pass path by path")


def test_rank_deficient_regression_uses_mean():
    spec, model = lattice_contract()
    engine = LsmcStorageEngine(spec, model, LsmcConfig(n_paths=200, n_runs=2))
    coeffs = engine._fit(np.full(200, 5.0), np.arange(200.0), 1, 0)
    assert coeffs.tolist() == [pytest.approx(99.5)]


def test_matches_two_date_lattice():
    print("\n3️⃣  Testing Against the Two-Date Lattice...")
    spec, model = lattice_contract()
    expected = lattice_value(spec, model)
    engine = LsmcStorageEngine(spec, model, LsmcConfig(n_paths=20_000, n_runs=2, seed=2024))
    seeds, oos_seeds = engine.run_seeds()
    run, _ = engine.run(seeds[0], oos_seeds[0])
    assert abs(run.value - expected) <= 3.0 * run.std_error + 0.01
    print(f"   ✅ LSMC {run.value:.4f} ± {run.std_error:.4f} vs lattice {expected:.4f}")


# ═══════════════════════════════════════════════════════
# 3. Runs, Determinism and Policy Statistics
# ═══════════════════════════════════════════════════════

def test_runs_are_deterministic():
    print("\n4️⃣  Testing Determinism...")
    spec, model = lattice_contract()
    config = LsmcConfig(n_paths=1000, n_runs=3, seed=11)
    first = LsmcStorageEngine(spec, model, config).value()
    second = LsmcStorageEngine(spec, model, config).value()
    threaded = LsmcStorageEngine(spec, model, config.model_copy(update={"n_jobs": 2})).value()
    values = [run.value for run in first.runs]
    assert values == [run.value for run in second.runs]
    assert values == [run.value for run in threaded.runs]
    assert len(set(run.seed for run in first.runs)) == 3
    assert first.ci_low <= first.value_mean <= first.ci_high
    print(f"   ✅ Same seed → same runs: {np.round(values, 4).tolist()}")


def test_single_run_is_refused():
    spec, model = lattice_contract()
    with pytest.raises(StatisticsException):
        LsmcStorageEngine(spec, model, LsmcConfig(n_paths=200, n_runs=1, seed=3)).value()


def test_single_run_functional_interval():
    spec, model = lattice_contract()
    result = lsmc_value(spec, model, LsmcConfig(n_paths=1000, n_runs=1, seed=3))
    run = result.runs[0]
    assert len(result.runs) == 1
    assert result.ci_high - result.value_mean == pytest.approx(1.96 * run.std_error)


def test_out_of_sample_can_be_disabled():
    spec, model = lattice_contract()
    result = LsmcStorageEngine(spec, model, LsmcConfig(n_paths=500, n_runs=2, seed=3, out_of_sample=False)).value()
    assert result.out_of_sample_mean is None


def test_policy_statistics_of_inaction():
    spec = degenerate_contract()
    _, model = lattice_contract()
    stats = LsmcStorageEngine(spec, model, LsmcConfig(n_paths=300, n_runs=2, seed=8)).value().policy
    assert stats.n_trajectories == 600
    assert len(stats.times) == spec.time.n_exercise + 2
    assert stats.mean_energy == [1.0] * len(stats.times)
    assert stats.min_energy == stats.max_energy == stats.mean_energy
    assert stats.ci_low == stats.ci_high == stats.mean_energy
    assert stats.total_usage() == {0.0: 600 * spec.time.n_exercise}
    assert stats.fraction_final_at_max == 0.0
    print("   ✅ Flat energy band for a contract that can only wait")


def test_policy_statistics_track_energy():
    spec, model = lattice_contract()
    stats = LsmcStorageEngine(spec, model, LsmcConfig(n_paths=1000, n_runs=2, seed=8)).value().policy
    assert stats.mean_energy[0] == stats.mean_energy[1] == spec.e_start
    assert all(0.0 <= low <= high <= 3.0 for low, high in zip(stats.min_energy, stats.max_energy))
    assert sum(count for (m, _), count in stats.action_usage.items() if m == 1) == 2000
    assert [row[0] for row in stats.usage_rows()] == sorted(row[0] for row in stats.usage_rows())


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v", "-s"]))
