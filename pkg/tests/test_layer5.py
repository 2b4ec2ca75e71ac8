"""
Layer 5 Test — COS Pricer
Tests the COS backward induction against closed-form and brute-force
reference values, the Greeks against finite differences, and the
parallel / FFT execution paths against the serial dense one.
"""
import sys
import os

import numpy as np
import pytest

sys.path.append(os.getcwd())

from src.app.exceptions.custom_exceptions import ParameterDomainException, SingularDerivativeException
from src.app.models.price_model import OUParams
from src.app.models.valuation_model import CosConfig
from src.app.services.cos.coefficients import continuation_value
from src.app.services.cos.cos_pricer import CosStoragePricer, backward_induction, full_vega_fd
from src.app.services.price_model.brownian_motion import ArithmeticBrownianLaw
from src.app.services.price_model.ou_process import OUTransitionLaw
from src.app.services.price_model.polynomial_map import build_map, second_order_factors
from tests.lattice_oracle import degenerate_contract, lattice_contract, lattice_value

CONFIG = CosConfig(n_terms=200)


# ═══════════════════════════════════════════════════════
# 1. Reference Values
# ═══════════════════════════════════════════════════════

def test_degenerate_contract_is_discounted_penalty():
    print("\n1️⃣  Testing Degenerate Contract...")
    spec = degenerate_contract()
    _, model = lattice_contract()
    result = CosStoragePricer(spec, model, CosConfig(n_terms=64)).value()
    expected = -100.0 * np.exp(-model.market.r * spec.time.settlement)
    assert result.value_at_start == pytest.approx(expected, abs=1e-10)
    assert result.values_per_level[2] == pytest.approx(0.0, abs=1e-10)
    print(f"   ✅ v = {result.value_at_start:.12f} = −100·e^(−r(T+Δt))")


def test_matches_two_date_lattice():
    print("\n2️⃣  Testing Against the Two-Date Lattice...")
    spec, model = lattice_contract()
    expected = lattice_value(spec, model)
    computed = CosStoragePricer(spec, model, CONFIG).value().value_at_start
    assert computed == pytest.approx(expected, abs=1e-3)
    print(f"   ✅ COS {computed:.6f} vs lattice {expected:.6f}")


def test_efficiency_dominance():
    spec, model = lattice_contract(eta=1.0)
    lossy, _ = lattice_contract(eta=0.9)
    assert CosStoragePricer(spec, model, CONFIG).value().value_at_start >= \
        CosStoragePricer(lossy, model, CONFIG).value().value_at_start


def test_value_at_matches_headline_value():
    spec, model = lattice_contract()
    pricer = CosStoragePricer(spec, model, CONFIG)
    result = pricer.value()
    assert pricer.value_at(model.spot0, spec.e_start, 0) == pytest.approx(result.value_at_start, abs=1e-12)
    assert len(result.values_per_level) == 4
    assert result.n_terms == 200
    assert result.truncation == (pricer.truncation.a, pricer.truncation.b)
    assert result.diagnostics["partitions"] == 8.0
    with pytest.raises(ParameterDomainException):
        pricer.value_at(model.spot0, spec.e_start, 5)


def test_functional_entry_point():
    spec, model = lattice_contract()
    result = backward_induction(spec, model, CONFIG, with_greeks=True)
    assert result.greeks is not None
    assert result.greeks.s == pytest.approx(model.spot0)


# ═══════════════════════════════════════════════════════
# 2. Greeks
# ═══════════════════════════════════════════════════════

def test_delta_gamma_match_finite_differences():
    print("\n3️⃣  Testing Greeks...")
    spec, model = lattice_contract()
    pricer = CosStoragePricer(spec, model, CONFIG)
    s, e = model.spot0, spec.e_start
    greeks = pricer.greeks_at(0, s, e)

    h = 1e-3
    delta_fd = (pricer.value_at(s + h, e) - pricer.value_at(s - h, e)) / (2.0 * h)
    h = 1e-2
    gamma_fd = (pricer.value_at(s + h, e) - 2.0 * pricer.value_at(s, e) + pricer.value_at(s - h, e)) / h ** 2
    assert greeks.delta == pytest.approx(delta_fd, abs=1e-6)
    assert greeks.gamma == pytest.approx(gamma_fd, abs=1e-5)
    print(f"   ✅ Δ={greeks.delta:.6f}, Γ={greeks.gamma:.6f}")


def test_vega_at_fixed_coefficients():
    spec, model = lattice_contract()
    pricer = CosStoragePricer(spec, model, CONFIG)
    greeks = pricer.greeks_at(0, model.spot0, spec.e_start)
    coeffs = pricer.backward_induction().at(1, spec.start_index)

    h = 1e-4
    laws = [OUTransitionLaw(OUParams(**{**model.ou.model_dump(), "sigma": model.ou.sigma + bump}))
            for bump in (h, -h)]
    up, down = (continuation_value(coeffs, model.ou.x0, law, pricer.dt, model.market.r, pricer.truncation)
                for law in laws)
    assert greeks.vega == pytest.approx((up - down) / (2.0 * h), abs=1e-6)
    print(f"   ✅ ν={greeks.vega:.6f}")


def test_full_vega_finite_difference():
    spec, model = lattice_contract()
    fd = full_vega_fd(spec, model, CosConfig(n_terms=128))
    assert np.isfinite(fd)
    with pytest.raises(ParameterDomainException):
        full_vega_fd(spec, model, CONFIG, h=2.0)


def test_greeks_surface_shape():
    spec, model = lattice_contract()
    pricer = CosStoragePricer(spec, model, CosConfig(n_terms=128))
    rows = pricer.greeks_surface(1, [20.0, 30.0, 40.0])
    assert len(rows) == 3 * 4
    assert {row.e for row in rows} == {0.0, 1.0, 2.0, 3.0}
    assert all(row.t_index == 1 for row in rows)


def test_singular_map_derivative():
    spec, model = lattice_contract()
    flat_at_zero = model.model_copy(update={"price_map": build_map(second_order_factors(0.0))})
    pricer = CosStoragePricer(spec, flat_at_zero, CosConfig(n_terms=64))
    with pytest.raises(SingularDerivativeException):
        pricer.greeks_at(0, 0.0, spec.e_start)
    print("   ✅ Φ'(x) = 0 raises SingularDerivativeException")


# ═══════════════════════════════════════════════════════
# 3. Execution Paths
# ═══════════════════════════════════════════════════════

def test_results_independent_of_worker_count():
    print("\n4️⃣  Testing Execution Paths...")
    spec, model = lattice_contract()
    serial = CosStoragePricer(spec, model, CosConfig(n_terms=128, n_jobs=1)).backward_induction()
    threaded = CosStoragePricer(spec, model, CosConfig(n_terms=128, n_jobs=2)).backward_induction()
    assert np.array_equal(serial.values, threaded.values)
    print("   ✅ n_jobs=1 and n_jobs=2 give identical tables")


def test_pruning_keeps_start_value():
    spec, model = lattice_contract()
    narrow = spec.model_copy(update={"i_min_op": -1.0, "i_max_op": 1.0})
    full = CosStoragePricer(narrow, model, CosConfig(n_terms=128)).value()
    pruned = CosStoragePricer(narrow, model, CosConfig(n_terms=128, prune_unreachable=True)).value()
    assert pruned.value_at_start == pytest.approx(full.value_at_start, abs=1e-12)
    assert np.isnan(pruned.values_per_level[3])


def test_fft_matches_dense_for_brownian_law():
    spec, model = lattice_contract()
    law = ArithmeticBrownianLaw(mu=0.0, sigma=1.2, x0=model.ou.x0)
    dense = CosStoragePricer(spec, model, CosConfig(n_terms=128), law=law).value()
    fft = CosStoragePricer(spec, model, CosConfig(n_terms=128, use_fft=True), law=law).value()
    assert fft.value_at_start == pytest.approx(dense.value_at_start, abs=1e-8)
    assert dense.diagnostics["beta"] == 1.0
    print(f"   ✅ FFT and dense agree for β = 1: v = {fft.value_at_start:.6f}")


def test_fft_falls_back_for_ou_law():
    spec, model = lattice_contract()
    pricer = CosStoragePricer(spec, model, CosConfig(n_terms=64, use_fft=True))
    assert not pricer.kernel.use_fft


def test_spec_warnings_are_exposed():
    spec, model = lattice_contract()
    pricer = CosStoragePricer(spec, model, CosConfig(n_terms=64))
    assert len(pricer.warnings) == 1


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v", "-s"]))
