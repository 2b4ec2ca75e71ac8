import logging
import time
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from src.app.config.run_config import RunConfig, load_run_config
from src.app.exceptions.custom_exceptions import (
    ConfigException,
    NumericException,
    ParameterDomainException,
    StorageValuationException,
)
from src.app.helpers import reference_values as ref
from src.app.models.valuation_model import Greeks, ValuationResult
from src.app.repositories.result_repository import ResultRepository
from src.app.services.cos.cos_pricer import CosStoragePricer, full_vega_fd
from src.app.services.lsmc.lsmc_service import LsmcStorageEngine

logger = logging.getLogger(__name__)


class ValuationController:
    """
    Orchestrates COS valuations for the CLI: one run, Greeks, convergence in N,
    one-parameter sweeps and the published-value reproduction.
    Every method returns its result and persists it through the repository.
    """

    def __init__(self, repository: ResultRepository):
        self.repository = repository

    def _pricer(self, config: RunConfig, n_jobs: Optional[int] = None) -> CosStoragePricer:
        pricer = CosStoragePricer(config.to_contract_spec(), config.to_price_model(), config.to_cos_config(n_jobs))
        for warning in pricer.warnings:
            logger.warning(f"⚠️ {config.label}: {warning}")
        return pricer

    # ─── Single Valuation ────────────────────────────────────────────────

    def price(
        self,
        config: RunConfig,
        n_jobs: Optional[int] = None,
        with_greeks: bool = True,
        vega_fd: bool = False,
        dump_coefficients: bool = False,
    ) -> ValuationResult:
        try:
            pricer = self._pricer(config, n_jobs)
            result = pricer.value(with_greeks=with_greeks)
            if vega_fd:
                fd = full_vega_fd(pricer.spec, pricer.model, pricer.config)
                result = result.model_copy(update={"full_vega_fd": fd})
                logger.info(f"📊 Full finite-difference vega {fd:.6f} (ν at fixed coefficients "
                             f"{result.greeks.vega if result.greeks else float('nan'):.6f})")

            self.repository.save_valuation(config.label, result)
            if dump_coefficients:
                self.repository.save_coefficients(config.label, pricer.backward_induction(), pricer.spec.grid.levels)

            logger.info(f"✅ {config.label}: v(t0, S0={result.spot0:.4f}, e={result.e_start}) = {result.value_at_start:.6f}")
            return result
        except StorageValuationException:
            raise
        except Exception as e:
            logger.error(f"❌ ValuationController.price failed for {config.label}: {e}")
            raise NumericException(f"valuation failed: {e}") from e

    def greeks(
        self,
        config: RunConfig,
        t_index: int = 0,
        prices: Optional[Sequence[float]] = None,
        n_jobs: Optional[int] = None,
    ) -> List[Greeks]:
        """
        Without `prices`: the single point (S0, e_start) at t_index.
        With `prices`: the surface prices × all energy levels.
        """
        pricer = self._pricer(config, n_jobs)
        if prices:
            rows = pricer.greeks_surface(t_index, prices)
        else:
            rows = [pricer.greeks_at(t_index, pricer.model.spot0, pricer.spec.e_start)]
        self.repository.save_greeks(config.label, rows)
        logger.info(f"✅ {config.label}: {len(rows)} Greeks rows at t_index={t_index}")
        return rows

    # ─── Studies ─────────────────────────────────────────────────────────

    def convergence(self, config: RunConfig, n_list: Sequence[int], n_jobs: Optional[int] = None) -> List[dict]:
        """v(t0, S0, e_start) for each N, with |v_N − v_{N_max}| against the largest N."""
        if not n_list:
            raise ConfigException("the N list is empty")
        rows = []
        for n_terms in n_list:
            started = time.perf_counter()
            run = config.with_overrides(**{"cos.n_terms": int(n_terms)})
            value = self._pricer(run, n_jobs).value().value_at_start
            rows.append({"n_terms": int(n_terms), "value": value})
            logger.info(f"   N={n_terms}: v={value:.6f} ({time.perf_counter() - started:.2f}s)")

        reference = max(rows, key=lambda row: row["n_terms"])["value"]
        for row in rows:
            row["abs_diff_to_max_n"] = abs(row["value"] - reference)
        self.repository.save_table(config.label, "convergence", rows)
        return rows

    def sweep(self, config: RunConfig, param: str, values: Sequence[float], n_jobs: Optional[int] = None) -> List[dict]:
        """One-parameter sensitivity over a dotted configuration key, e.g. model.kappa."""
        if not values:
            raise ConfigException("the sweep needs at least one value")
        rows = []
        for value in values:
            run = config.with_overrides(**{param: value})
            result = self._pricer(run, n_jobs).value()
            rows.append({"parameter": param, "parameter_value": value, "value": result.value_at_start})
            logger.info(f"   {param}={value}: v={result.value_at_start:.6f}")
        safe_name = param.replace(".", "_")
        self.repository.save_table(config.label, f"sweep_{safe_name}", rows)
        return rows

    # ─── Reproduction ────────────────────────────────────────────────────

    def reproduce(
        self,
        config_dir: str,
        contracts: Sequence[int] = ref.CONTRACTS,
        sigmas: Sequence[float] = ref.SIGMAS,
        n_jobs: Optional[int] = None,
        with_lsmc: bool = False,
        label: str = "reproduction",
    ) -> List[dict]:
        """
        Price every bundled (contract, σ) configuration and compare with the
        published values and Greeks; optionally check the COS value against
        a fresh LSMC interval widened by 0.01.
        """
        rows = []
        for contract in contracts:
            for sigma in sigmas:
                if (contract, sigma) not in ref.COS_VALUES:
                    raise ParameterDomainException(f"no published values for contract {contract}, σ={sigma}")
                path = Path(config_dir) / f"{ref.config_name(contract, sigma)}.yaml"
                config = load_run_config(path)
                pricer = self._pricer(config, n_jobs)
                result = pricer.value()
                rows.extend(self._value_rows(contract, sigma, result.value_at_start))

                if (contract, sigma) in ref.GREEKS:
                    greeks = pricer.greeks_at(0, pricer.model.spot0, pricer.spec.e_start)
                    rows.extend(self._greeks_rows(contract, sigma, greeks))

                if with_lsmc:
                    engine = LsmcStorageEngine(pricer.spec, pricer.model, config.to_lsmc_config(n_jobs=n_jobs))
                    lsmc = engine.value()
                    low, high = lsmc.ci_low - ref.LSMC_CI_WIDENING, lsmc.ci_high + ref.LSMC_CI_WIDENING
                    rows.append(self._row(contract, sigma, "cos_in_lsmc_ci", (low + high) / 2,
                                          result.value_at_start, (high - low) / 2,
                                          low <= result.value_at_start <= high))

        passed = sum(row["passed"] for row in rows)
        logger.info(f"📊 Reproduction: {passed}/{len(rows)} cells within tolerance")
        self.repository.save_table(label, "report", rows)
        return rows

    @staticmethod
    def _row(contract: int, sigma: float, quantity: str, expected: float, computed: float,
             tolerance: float, passed: bool) -> dict:
        return {
            "contract": contract, "sigma": sigma, "quantity": quantity,
            "expected": expected, "computed": computed,
            "abs_error": abs(computed - expected), "tolerance": tolerance, "passed": bool(passed),
        }

    def _value_rows(self, contract: int, sigma: float, value: float) -> List[dict]:
        expected = ref.COS_VALUES[(contract, sigma)][200]
        if contract == 3:
            return [self._row(contract, sigma, "value", 0.0, value, ref.ZERO_VALUE_BOUND,
                              ref.value_matches(contract, value, expected))]
        return [self._row(contract, sigma, "value", expected, value, ref.value_tolerance(expected),
                          ref.value_matches(contract, value, expected))]

    def _greeks_rows(self, contract: int, sigma: float, greeks: Greeks) -> List[dict]:
        expected = ref.GREEKS[(contract, sigma)]
        computed = (greeks.delta, greeks.gamma, greeks.vega)
        return [
            self._row(contract, sigma, name, want, float(got), ref.GREEKS_TOLERANCE,
                      bool(np.abs(got - want) <= ref.GREEKS_TOLERANCE))
            for name, want, got in zip(("delta", "gamma", "vega"), expected, computed)
        ]
