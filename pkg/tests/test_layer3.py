"""
Layer 3 Test — Contract Core
Tests the contract data model, action sets, payoff, penalties and the
specification validator on the bundled contracts.
"""
import sys
import os

import numpy as np
import pytest

sys.path.append(os.getcwd())

from pydantic import ValidationError

from src.app.config.run_config import load_run_config
from src.app.exceptions.custom_exceptions import (
    EXIT_CONFIG_ERROR,
    ActionException,
    GridException,
    SpecValidationException,
)
from src.app.helpers import reference_values as ref
from src.app.models.contract_model import EnergyGrid, TimeGrid
from src.app.services.contract.contract_service import (
    allowed_actions,
    allowed_steps,
    immediate_charge_cost,
    payoff,
    penalised_steps,
    penalty_free_actions,
    rapidity_penalty,
    settlement_penalty,
    step_payoff,
)
from src.app.validators.contract_validator import collect_spec_issues, validate_spec

CONFIG_DIR = os.path.join(os.getcwd(), "configs")


def bundled_spec(name: str):
    return load_run_config(os.path.join(CONFIG_DIR, f"{name}.yaml")).to_contract_spec()


# ═══════════════════════════════════════════════════════
# 1. Time and Energy Grids
# ═══════════════════════════════════════════════════════

def test_time_grid():
    print("\n1️⃣  Testing Time & Energy Grids...")
    grid = TimeGrid(t0=0.0, maturity=1.0, n_exercise=50)
    assert grid.dt == pytest.approx(0.02)
    assert grid.settlement == pytest.approx(1.02)
    assert grid.times.size == 52
    assert grid.times[-1] == pytest.approx(1.02)
    with pytest.raises(ValidationError):
        TimeGrid(t0=1.0, maturity=1.0, n_exercise=5)


def test_energy_grid():
    grid = EnergyGrid(e_min=0.0, e_max=15.0, delta=1.0)
    assert grid.n_levels == 15
    assert grid.levels.size == 16
    assert grid.index_of(7.0) == 7
    assert grid.index_of(7.5) == -1
    assert grid.index_of(16.0) == -1
    with pytest.raises(ValidationError):
        EnergyGrid(e_min=0.0, e_max=10.0, delta=3.0)
    with pytest.raises(ValidationError):
        EnergyGrid(e_min=5.0, e_max=5.0)
    print("   ✅ Grids enumerate dates and levels")


# ═══════════════════════════════════════════════════════
# 2. Action Sets
# ═══════════════════════════════════════════════════════

def test_contract1_action_sets():
    print("\n2️⃣  Testing Action Sets...")
    spec = bundled_spec("contract1_sigma06")
    actions = [a.de for a in allowed_actions(spec, 7.0)]
    assert actions == [float(n) for n in range(-6, 7)]
    assert [a.de for a in allowed_actions(spec, 0.0)] == [float(n) for n in range(0, 7)]
    assert [a.de for a in allowed_actions(spec, 15.0)] == [float(n) for n in range(-6, 1)]
    assert [a.de for a in penalty_free_actions(spec, 7.0)] == [float(n) for n in range(-4, 5)]
    assert penalised_steps(spec, 7).tolist() == [-6, -5, 5, 6]
    print(f"   ✅ Contract 1 at e=7: {len(actions)} actions")


def test_inaction_always_allowed():
    spec = bundled_spec("contract4_sigma06")
    for j in range(spec.grid.n_levels + 1):
        assert 0 in allowed_steps(spec, j)


def test_actions_off_grid_level():
    spec = bundled_spec("contract1_sigma06")
    with pytest.raises(GridException) as exc:
        allowed_actions(spec, 7.5)
    assert exc.value.exit_code == EXIT_CONFIG_ERROR


def test_no_release_variant():
    spec = bundled_spec("contract4_no_release")
    assert [a.de for a in allowed_actions(spec, 2.0)] == [0.0, 1.0, 2.0, 3.0, 4.0]
    assert validate_spec(spec) == []
    print("   ✅ No-release contract only charges or waits")


# ═══════════════════════════════════════════════════════
# 3. Payoff and Penalties
# ═══════════════════════════════════════════════════════

def test_payoff():
    print("\n3️⃣  Testing Payoff & Penalties...")
    spec = bundled_spec("contract1_sigma06")
    assert payoff(spec, 10.0, 6.0) == pytest.approx(-63.1579, abs=1e-4)
    assert payoff(spec, 30.0, -3.0) == pytest.approx(90.0)
    assert payoff(spec, 30.0, 0.0) == 0.0
    vector = step_payoff(spec, np.array([10.0, 20.0]), -2)
    assert vector.tolist() == pytest.approx([20.0, 40.0])
    print("   ✅ Charging pays s·Δe/η, releasing earns s·|Δe|")


def test_rapidity_penalty():
    spec = bundled_spec("contract1_sigma06")
    assert rapidity_penalty(spec, 7.0, 4.0) == 0.0
    assert rapidity_penalty(spec, 7.0, -4.0) == 0.0
    assert rapidity_penalty(spec, 7.0, 5.0) == -3.0
    assert rapidity_penalty(spec, 7.0, -6.0) == -3.0
    with pytest.raises(ActionException):
        rapidity_penalty(spec, 0.0, -1.0)
    with pytest.raises(ActionException):
        rapidity_penalty(spec, 7.0, 0.5)
    with pytest.raises(ActionException):
        rapidity_penalty(spec, 7.0, 7.0)


def test_threshold_settlement():
    spec = bundled_spec("contract1_sigma06")
    assert settlement_penalty(spec, 6.0) == -350.0
    assert settlement_penalty(spec, 7.0) == 0.0
    assert settlement_penalty(spec, 15.0) == 0.0


def test_piecewise_linear_settlement():
    spec = bundled_spec("contract4_sigma06")
    assert settlement_penalty(spec, 0.0) == -2000.0
    assert settlement_penalty(spec, 5.0) == -2000.0
    assert settlement_penalty(spec, 6.0) == pytest.approx(-1000.0)
    assert settlement_penalty(spec, 9.0) == pytest.approx(-500.0)
    assert settlement_penalty(spec, 12.0) == pytest.approx(0.0)
    with pytest.raises(GridException):
        settlement_penalty(spec, 6.5)
    print("   ✅ Contract 4 settlement: −2000 below 6 MWh, linear to 0 at 12 MWh")


def test_immediate_charge_cost():
    spec = bundled_spec("contract4_sigma06")
    cost = immediate_charge_cost(spec, 30.0)
    assert cost == pytest.approx(ref.CONTRACT4_IMMEDIATE_CHARGE_COST, abs=0.01)


# ═══════════════════════════════════════════════════════
# 4. Specification Validation
# ═══════════════════════════════════════════════════════

def test_bundled_contracts_are_valid():
    print("\n4️⃣  Testing Specification Validator...")
    for contract in ref.CONTRACTS:
        spec = bundled_spec(ref.config_name(contract, 0.6))
        warnings = validate_spec(spec)
        assert len(warnings) == 1
        assert "inactive" in warnings[0]
    print("   ✅ All bundled contracts valid (market minimum inactive at δ = 1)")


def test_market_minimum_of_one_step_is_active():
    spec = bundled_spec("contract1_sigma06")
    one_step = spec.model_copy(update={"i_min_market": -spec.grid.delta})
    errors, warnings = collect_spec_issues(one_step)
    assert errors == []
    assert warnings == []

    half_step = spec.model_copy(update={"i_min_market": -0.5 * spec.grid.delta})
    _, warnings = collect_spec_issues(half_step)
    assert len(warnings) == 1 and "inactive" in warnings[0]
    print("   ✅ |i_min_market| = δ binds, |i_min_market| < δ is flagged inactive")


def test_validator_reports_every_violation():
    spec = bundled_spec("contract1_sigma06").model_copy(update={
        "i_min_op": -2.0, "i_min_b": -3.0, "eta": 1.5, "e_start": 7.5, "q_b_value": 1.0,
    })
    errors, _ = collect_spec_issues(spec)
    fields = {error["field"] for error in errors}
    assert {"i_min_op", "eta", "e_start", "q_b_value"} <= fields

    with pytest.raises(SpecValidationException) as exc:
        validate_spec(spec)
    assert exc.value.exit_code == EXIT_CONFIG_ERROR
    assert len(exc.value.errors) == len(errors)
    print(f"   ✅ {len(errors)} violations reported together")


def test_validator_rate_not_on_grid():
    spec = bundled_spec("contract1_sigma06").model_copy(update={"i_max_b": 2.5})
    errors, _ = collect_spec_issues(spec)
    assert any(error["field"] == "i_max_b" for error in errors)


def test_validator_settlement_fix_outside_grid():
    spec = bundled_spec("contract4_sigma06")
    moved = spec.model_copy(update={"settlement": spec.settlement.model_copy(update={"e_fix": 20.0})})
    errors, _ = collect_spec_issues(moved)
    assert [error["field"] for error in errors] == ["settlement.e_fix"]


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v", "-s"]))
