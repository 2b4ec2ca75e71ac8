"""
Layer 8 Test — Published-Value Reproduction
Prices the bundled contract configurations with M = 50 exercise dates and
compares the COS values, Greeks, convergence in N and LSMC intervals with
the published tables. Minutes per configuration, so the module is marked
`reproduction` and skipped by default:

    pytest -m reproduction tests/test_layer8.py
"""
import sys
import os
from functools import lru_cache

import numpy as np
import pytest

sys.path.append(os.getcwd())

from src.app.config.run_config import load_run_config
from src.app.helpers import reference_values as ref
from src.app.services.cos.cos_pricer import CosStoragePricer
from src.app.services.lsmc.lsmc_service import LsmcStorageEngine

pytestmark = pytest.mark.reproduction

CONFIG_DIR = os.path.join(os.getcwd(), "configs")


def bundled(name: str):
    return load_run_config(os.path.join(CONFIG_DIR, f"{name}.yaml"))


@lru_cache(maxsize=None)
def cos_pricer(contract: int, sigma: float) -> CosStoragePricer:
    config = bundled(ref.config_name(contract, sigma))
    return CosStoragePricer(config.to_contract_spec(), config.to_price_model(), config.to_cos_config())


@lru_cache(maxsize=None)
def cos_value(contract: int, sigma: float) -> float:
    return cos_pricer(contract, sigma).value().value_at_start


@lru_cache(maxsize=None)
def lsmc_result(contract: int, sigma: float):
    config = bundled(ref.config_name(contract, sigma))
    return LsmcStorageEngine(config.to_contract_spec(), config.to_price_model(), config.to_lsmc_config()).value()


# ═══════════════════════════════════════════════════════
# 1. COS Values
# ═══════════════════════════════════════════════════════

@pytest.mark.parametrize("contract,sigma", sorted(ref.COS_VALUES))
def test_cos_value(contract, sigma):
    expected = ref.COS_VALUES[(contract, sigma)][200]
    computed = cos_value(contract, sigma)
    assert ref.value_matches(contract, computed, expected), (computed, expected)
    print(f"\n   ✅ contract {contract}, σ={sigma}: v = {computed:.4f} (published {expected:.4f})")


def test_convergence_in_n():
    print("\n1️⃣  Testing Convergence in N (contract 2, σ = 0.6)...")
    config = bundled(ref.config_name(2, 0.6))
    spec, model = config.to_contract_spec(), config.to_price_model()
    values = {
        n: CosStoragePricer(spec, model, config.cos.model_copy(update={"n_terms": n})).value().value_at_start
        for n in (100, 150, 200, 400)
    }
    published = ref.COS_VALUES[(2, 0.6)]
    for n in (100, 150):
        assert abs(values[n] - published[n]) <= ref.VALUE_ABS_TOLERANCE
    gaps = [abs(values[n] - values[400]) for n in (100, 150, 200)]
    assert gaps[0] >= gaps[2]
    assert gaps[2] <= 1e-3
    print(f"   ✅ {', '.join(f'N={n}: {v:.4f}' for n, v in values.items())}")


# ═══════════════════════════════════════════════════════
# 2. Greeks
# ═══════════════════════════════════════════════════════

@pytest.mark.parametrize("contract,sigma", sorted(ref.GREEKS))
def test_greeks(contract, sigma):
    pricer = cos_pricer(contract, sigma)
    greeks = pricer.greeks_at(0, pricer.model.spot0, pricer.spec.e_start)
    computed = np.array([greeks.delta, greeks.gamma, greeks.vega])
    expected = np.array(ref.GREEKS[(contract, sigma)])
    assert np.all(np.abs(computed - expected) <= ref.GREEKS_TOLERANCE), (computed, expected)
    print(f"\n   ✅ contract {contract}, σ={sigma}: Δ={computed[0]:.4f} Γ={computed[1]:.4f} ν={computed[2]:.4f}")


# ═══════════════════════════════════════════════════════
# 3. LSMC Cross-Check
# ═══════════════════════════════════════════════════════

@pytest.mark.parametrize("contract,sigma", [(2, 0.6), (2, 1.2), (4, 0.6), (1, 0.3)])
def test_cos_inside_lsmc_interval(contract, sigma):
    print(f"\n2️⃣  Testing LSMC interval (contract {contract}, σ = {sigma})...")
    result = lsmc_result(contract, sigma)
    value = cos_value(contract, sigma)
    low = result.ci_low - ref.LSMC_CI_WIDENING
    high = result.ci_high + ref.LSMC_CI_WIDENING
    assert low <= value <= high
    assert len(result.runs) == 10
    print(f"   ✅ COS {value:.4f} ∈ [{low:.4f}, {high:.4f}]")


def test_contract4_fills_the_vehicle():
    stats = lsmc_result(4, 0.6).policy
    assert stats.fraction_final_at_max >= 0.95
    print(f"\n   ✅ {stats.fraction_final_at_max:.1%} of trajectories end at e_max")


def test_contract1_low_volatility_stays_idle():
    stats = lsmc_result(1, 0.3).policy
    start = ref.CONTRACT_PARAMETERS[1]["e_start_mwh"]
    assert np.all(np.abs(np.array(stats.mean_energy) - start) <= 0.05)
    print("\n   ✅ Mean energy stays at e_start for contract 1, σ = 0.3")


def test_no_release_variant_is_worth_less():
    config = bundled("contract4_no_release")
    pricer = CosStoragePricer(config.to_contract_spec(), config.to_price_model(), config.to_cos_config())
    restricted = pricer.value().value_at_start
    assert not pricer.warnings
    assert restricted <= cos_value(4, 0.6) + ref.value_tolerance(restricted)
    print(f"\n   ✅ without release v = {restricted:.4f} ≤ {cos_value(4, 0.6):.4f}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v", "-s", "-m", "reproduction"]))
