"""
╔══════════════════════════════════════════════════════════════════════════╗
║             Least-Squares Monte Carlo for Storage Contracts             ║
╠══════════════════════════════════════════════════════════════════════════╣
║                                                                        ║
║  Backward pass (per run):                                              ║
║    ACF_{M+1}(e)  = q_s(e)                                              ║
║    CV_m(e)       = polyfit(S_m, e^{−rΔt}·ACF_{m+1}(e), degree)         ║
║    Δe*           = argmax_{Δe ∈ A(e)} PO + CV_m(e + Δe) + Q            ║
║    ACF_m(e)      = PO + Q + e^{−rΔt}·ACF_{m+1}(e + Δe*)                 ║
║    value         = mean of e^{−rΔt}·ACF_1(e_start)                      ║
║                                                                        ║
║  Fits use every path. The fitted policy is then replayed forward on    ║
║  the same paths (energy statistics, action usage) and on fresh paths   ║
║  (out-of-sample value).                                                ║
║                                                                        ║
╚══════════════════════════════════════════════════════════════════════════╝
"""

import logging
from typing import Dict, List, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed

from src.app.config.config import Config
from src.app.exceptions.custom_exceptions import StatisticsException
from src.app.models.contract_model import ContractSpec, ceil_steps, floor_steps
from src.app.models.price_model import PathEnsemble, PriceModel
from src.app.models.valuation_model import LsmcConfig, LsmcResult, LsmcRun, PolicyStatistics
from src.app.services.cos.switch_partition import candidate_steps
from src.app.services.price_model.ou_process import simulate_paths
from src.app.validators.contract_validator import validate_spec

logger = logging.getLogger(__name__)

Z_95 = 1.96


def confidence_interval(values: Sequence[float], z: float = Z_95) -> Tuple[float, float]:
    """Sample mean ± z·(sample stdev/√n) over independent run values."""
    values = np.asarray(values, dtype=float)
    if values.size < 2:
        raise StatisticsException(
            f"a confidence interval needs at least 2 runs, got {values.size}",
            details={"n_runs": int(values.size)}
        )
    mean = float(values.mean())
    half_width = z * float(values.std(ddof=1)) / np.sqrt(values.size)
    return mean - half_width, mean + half_width


class FittedPolicy:
    """Regression coefficients per (m, level); coeffs[m][j] in numpy.polyfit order."""

    def __init__(self, coeffs: Dict[int, List[np.ndarray]]):
        self.coeffs = coeffs

    def continuation(self, m: int, j: int, spot: np.ndarray) -> np.ndarray:
        return np.polyval(self.coeffs[m][j], spot)


class PolicyReplay:
    """Pathwise outcome of following a fitted policy."""

    def __init__(self, discounted_cash: np.ndarray, levels: np.ndarray, steps: np.ndarray):
        self.discounted_cash = discounted_cash   # (n_paths,)
        self.levels = levels                     # (n_paths, M + 2) level indices at t_0..t_{M+1}
        self.steps = steps                       # (n_paths, M) chosen steps at t_1..t_M


class LsmcStorageEngine:
    """LSMC valuation, confidence interval and policy statistics of one contract."""

    def __init__(self, spec: ContractSpec, model: PriceModel, config: LsmcConfig):
        validate_spec(spec)
        self.spec = spec
        self.model = model
        self.config = config
        self.seed = config.seed if config.seed is not None else Config.DEFAULT_SEED
        self.dt = spec.time.dt
        self.discount = float(np.exp(-model.market.r * self.dt))

        n_levels = spec.grid.n_levels
        self.levels = spec.grid.levels
        self.settlement = np.array([spec.settlement_value(e) for e in self.levels])
        self.candidates = [candidate_steps(spec, j) for j in range(n_levels + 1)]

        delta = spec.grid.delta
        self._band = (ceil_steps(spec.i_min_b, delta), floor_steps(spec.i_max_b, delta))

    # ─── Cash Flows ──────────────────────────────────────────────────────

    def _cash_flow(self, spot: np.ndarray, steps) -> np.ndarray:
        """PO + Q for (vectorised) steps."""
        steps = np.asarray(steps)
        de = steps * self.spec.grid.delta
        payoff = np.where(de > 0.0, -spot * de / self.spec.eta, -spot * de)
        penalised = (steps < self._band[0]) | (steps > self._band[1])
        return payoff + np.where(penalised, self.spec.q_b_value, 0.0)

    def _fit(self, spot: np.ndarray, target: np.ndarray, m: int, j: int) -> np.ndarray:
        coeffs, _, rank, _, _ = np.polyfit(spot, target, self.config.basis_degree, full=True)
        if rank < self.config.basis_degree + 1:
            logger.warning(
                f"⚠️ Rank-deficient regression at m={m}, e={self.levels[j]} "
                f"(rank {rank}); using the sample mean"
            )
            return np.array([float(np.mean(target))])
        return coeffs

    def _decide(self, policy: FittedPolicy, m: int, j: int, spot: np.ndarray) -> np.ndarray:
        steps = self.candidates[j]
        objective = np.vstack([
            self._cash_flow(spot, n) + policy.continuation(m, j + n, spot) for n in steps
        ])
        return steps[np.argmax(objective, axis=0)]

    # ─── Algorithm ───────────────────────────────────────────────────────

    def simulate(self, seed: int) -> Tuple[PathEnsemble, np.ndarray]:
        paths = simulate_paths(self.model.ou, self.config.n_paths, self.spec.time.times, seed)
        return paths, self.model.price_map.polynomial(paths.states)

    def fit(self, spot: np.ndarray) -> Tuple[FittedPolicy, np.ndarray]:
        """Backward pass. Returns the policy and the pathwise e^{−rΔt}·ACF_1 for every level."""
        n_exercise = self.spec.time.n_exercise
        n_paths = spot.shape[0]
        paths = np.arange(n_paths)
        acf = np.repeat(self.settlement[:, None], n_paths, axis=1)
        coeffs: Dict[int, List[np.ndarray]] = {}

        for m in range(n_exercise, 0, -1):
            x = spot[:, m]
            dacf = self.discount * acf
            coeffs[m] = [self._fit(x, dacf[j], m, j) for j in range(len(self.levels))]
            policy = FittedPolicy(coeffs)

            new_acf = np.empty_like(acf)
            for j in range(len(self.levels)):
                chosen = self._decide(policy, m, j, x)
                new_acf[j] = self._cash_flow(x, chosen) + self.discount * acf[j + chosen, paths]
            acf = new_acf

        return FittedPolicy(coeffs), self.discount * acf

    def replay(self, policy: FittedPolicy, spot: np.ndarray) -> PolicyReplay:
        """Follow the fitted policy forward from e_start on the given price paths."""
        n_exercise = self.spec.time.n_exercise
        n_paths = spot.shape[0]
        levels = np.empty((n_paths, n_exercise + 2), dtype=int)
        levels[:, 0] = levels[:, 1] = self.spec.start_index
        steps = np.zeros((n_paths, n_exercise), dtype=int)
        cash = np.zeros(n_paths)

        for m in range(1, n_exercise + 1):
            current = levels[:, m]
            chosen = np.zeros(n_paths, dtype=int)
            for j in np.unique(current):
                rows = np.nonzero(current == j)[0]
                chosen[rows] = self._decide(policy, m, int(j), spot[rows, m])
            cash += self.discount ** m * self._cash_flow(spot[:, m], chosen)
            steps[:, m - 1] = chosen
            levels[:, m + 1] = current + chosen

        cash += self.discount ** (n_exercise + 1) * self.settlement[levels[:, -1]]
        return PolicyReplay(discounted_cash=cash, levels=levels, steps=steps)

    def run(self, seed: int, oos_seed: int) -> Tuple[LsmcRun, PolicyReplay]:
        _, spot = self.simulate(seed)
        policy, dacf0 = self.fit(spot)
        start = dacf0[self.spec.start_index]
        std_error = float(start.std(ddof=1) / np.sqrt(start.size))
        in_sample = self.replay(policy, spot)

        oos_value = None
        if self.config.out_of_sample:
            _, fresh = self.simulate(oos_seed)
            oos_value = float(self.replay(policy, fresh).discounted_cash.mean())

        run = LsmcRun(
            value=float(start.mean()), std_error=std_error,
            n_paths=start.size, seed=seed, out_of_sample_value=oos_value
        )
        logger.info(
            f"   run seed={seed}: v={run.value:.4f} ± {Z_95 * std_error:.4f}"
            + (f", out-of-sample {oos_value:.4f}" if oos_value is not None else "")
        )
        return run, in_sample

    def run_seeds(self) -> Tuple[List[int], List[int]]:
        state = np.random.SeedSequence(self.seed).generate_state(2 * self.config.n_runs)
        return [int(s) for s in state[: self.config.n_runs]], [int(s) for s in state[self.config.n_runs:]]

    def value(self) -> LsmcResult:
        cfg = self.config
        logger.info(
            f"🚀 LSMC '{self.spec.name}': {cfg.n_runs} runs × {cfg.n_paths} paths, "
            f"degree {cfg.basis_degree}, seed {self.seed}"
        )
        seeds, oos_seeds = self.run_seeds()
        outcomes = Parallel(n_jobs=cfg.n_jobs, prefer="threads")(
            delayed(self.run)(seed, oos_seed) for seed, oos_seed in zip(seeds, oos_seeds)
        )
        runs = [run for run, _ in outcomes]
        ci_low, ci_high = confidence_interval([run.value for run in runs])
        policy = self.policy_statistics([replay for _, replay in outcomes])

        result = LsmcResult(
            contract=self.spec.name, sigma=self.model.ou.sigma,
            value_mean=float(np.mean([run.value for run in runs])),
            ci_low=ci_low, ci_high=ci_high, runs=runs, policy=policy,
        )
        logger.info(f"✅ LSMC value {result.value_mean:.4f}, 95% CI [{ci_low:.4f}, {ci_high:.4f}]")
        return result

    # ─── Policy Statistics ───────────────────────────────────────────────

    def policy_statistics(self, replays: Sequence[PolicyReplay]) -> PolicyStatistics:
        """Energy-level band/min/max per date and action counts over all trajectories of all runs."""
        levels = np.vstack([replay.levels for replay in replays])
        steps = np.vstack([replay.steps for replay in replays])
        energy = self.levels[levels]
        n = energy.shape[0]

        mean = energy.mean(axis=0)
        half_width = Z_95 * energy.std(axis=0, ddof=1) / np.sqrt(n) if n > 1 else np.zeros_like(mean)

        usage: Dict[Tuple[int, float], int] = {}
        for m in range(steps.shape[1]):
            values, counts = np.unique(steps[:, m], return_counts=True)
            for step, count in zip(values, counts):
                usage[(m + 1, float(step * self.spec.grid.delta))] = int(count)

        return PolicyStatistics(
            times=[float(t) for t in self.spec.time.times],
            mean_energy=mean.tolist(),
            ci_low=(mean - half_width).tolist(),
            ci_high=(mean + half_width).tolist(),
            min_energy=energy.min(axis=0).tolist(),
            max_energy=energy.max(axis=0).tolist(),
            action_usage=usage,
            n_trajectories=n,
            fraction_final_at_max=float(np.mean(levels[:, -1] == self.spec.grid.n_levels)),
        )


# ─── Functional Entry Points ────────────────────────────────────────────


def lsmc_value(spec: ContractSpec, model: PriceModel, config: LsmcConfig) -> LsmcResult:
    """
    A single LSMC run with the configured seed; the interval is the
    path-level one, mean ± 1.96·sd/√n_paths.
    """
    engine = LsmcStorageEngine(spec, model, config)
    seeds, oos_seeds = engine.run_seeds()
    run, replay = engine.run(seeds[0], oos_seeds[0])
    half_width = Z_95 * run.std_error
    return LsmcResult(
        contract=spec.name, sigma=model.ou.sigma, value_mean=run.value,
        ci_low=run.value - half_width, ci_high=run.value + half_width,
        runs=[run], policy=engine.policy_statistics([replay]),
    )


def policy_statistics(spec: ContractSpec, model: PriceModel, config: LsmcConfig) -> PolicyStatistics:
    return LsmcStorageEngine(spec, model, config).value().policy
