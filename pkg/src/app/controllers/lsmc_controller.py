import logging
from typing import List, Optional

import numpy as np

from src.app.config.config import Config
from src.app.config.run_config import RunConfig
from src.app.exceptions.custom_exceptions import NumericException, ParameterDomainException, StorageValuationException
from src.app.models.valuation_model import LsmcResult
from src.app.repositories.result_repository import ResultRepository
from src.app.services.lsmc.lsmc_service import LsmcStorageEngine
from src.app.services.price_model.ou_process import simulate_paths

logger = logging.getLogger(__name__)


class LsmcController:
    """
    Monte Carlo side of the CLI: the multi-run LSMC valuation with its policy
    statistics, and sample spot-price trajectories.
    """

    def __init__(self, repository: ResultRepository):
        self.repository = repository

    def lsmc(self, config: RunConfig, seed: Optional[int] = None, n_jobs: Optional[int] = None) -> LsmcResult:
        try:
            engine = LsmcStorageEngine(config.to_contract_spec(), config.to_price_model(),
                                       config.to_lsmc_config(seed=seed, n_jobs=n_jobs))
            result = engine.value()
            self.repository.save_lsmc(config.label, result)
            return result
        except StorageValuationException:
            raise
        except Exception as e:
            logger.error(f"❌ LsmcController.lsmc failed for {config.label}: {e}")
            raise NumericException(f"LSMC valuation failed: {e}") from e

    def simulate(self, config: RunConfig, n_paths: int = 10, seed: Optional[int] = None,
                 n_jobs: Optional[int] = None) -> List[dict]:
        """Spot-price trajectories S = Φ(X) on t_0..t_{M+1}, one row per (path, date)."""
        if n_paths < 1:
            raise ParameterDomainException(f"n_paths must be ≥ 1, got {n_paths}")
        model = config.to_price_model()
        spec = config.to_contract_spec()
        seed = seed if seed is not None else (config.lsmc.seed if config.lsmc.seed is not None else Config.DEFAULT_SEED)

        paths = simulate_paths(model.ou, n_paths, spec.time.times, seed, n_jobs=n_jobs or 1)
        spot = model.price_map.polynomial(paths.states)
        rows = [
            {"path": p, "m": m, "time": float(t), "x": float(paths.states[p, m]), "s": float(spot[p, m])}
            for p in range(n_paths)
            for m, t in enumerate(paths.times)
        ]
        self.repository.save_table(config.label, "paths", rows)
        logger.info(f"✅ {config.label}: {n_paths} paths, mean terminal price {np.mean(spot[:, -1]):.4f}")
        return rows
