"""
╔══════════════════════════════════════════════════════════════════════════╗
║                 COS Backward Induction for Storage Contracts            ║
╠══════════════════════════════════════════════════════════════════════════╣
║                                                                        ║
║  t_{M+1}   V_k(e) from the settlement penalty                          ║
║  t_M..t_1  per level e: switch partition of [a, b], then               ║
║            V_k(t_m, e) = Σ_i G_k + Ĉ_k + Q_k over its subintervals      ║
║  t_0       v(S0, e) = continuation value at x = Φ⁻¹(S0)                 ║
║                                                                        ║
║  Levels within a step are independent and run on a thread pool;       ║
║  each writes its own row, so results do not depend on n_jobs.          ║
║  Greeks reuse the table: Δ and Γ differentiate the state factor        ║
║  e^{iω_kβx}, ν differentiates φ with the coefficients held fixed.      ║
║                                                                        ║
╚══════════════════════════════════════════════════════════════════════════╝
"""

import logging
import time
from typing import List, Optional, Sequence

import numpy as np
from joblib import Parallel, delayed

from src.app.exceptions.custom_exceptions import (
    NumericException,
    ParameterDomainException,
    SingularDerivativeException,
)
from src.app.models.contract_model import ContractSpec, ceil_steps, floor_steps
from src.app.models.price_model import PriceModel
from src.app.models.valuation_model import CoefficientTable, CosConfig, Greeks, SwitchPartition, ValuationResult
from src.app.services.contract.contract_service import level_index
from src.app.services.cos.coefficients import (
    ContinuationKernel,
    continuation_basis,
    frequencies,
    payoff_coefficients_G,
    penalty_coefficients_Q,
    primed_weights,
    terminal_coefficients,
)
from src.app.services.cos.switch_partition import find_switch_partition
from src.app.services.price_model.ou_process import OUTransitionLaw
from src.app.services.price_model.polynomial_map import map_d1, map_d2, map_inverse
from src.app.validators.contract_validator import validate_spec

logger = logging.getLogger(__name__)


class CosStoragePricer:
    """
    COS valuation of one contract under one price model.

    The coefficient table is computed on first use and cached; `value`,
    `value_at` and the Greeks all read from it.
    """

    SINGULAR_SLOPE = 1e-14
    DEFAULT_VEGA_BUMP = 1e-3

    def __init__(self, spec: ContractSpec, model: PriceModel, config: CosConfig, law=None):
        self.warnings = validate_spec(spec)
        self.spec = spec
        self.model = model
        self.config = config
        self.law = law if law is not None else OUTransitionLaw(model.ou)

        self.dt = spec.time.dt
        horizon = spec.time.settlement - spec.time.t0 if config.truncation_horizon == "full" else self.dt
        self.truncation = self.law.truncation_range(horizon, config.l_bar)

        n_terms = config.n_terms
        self.omega = frequencies(n_terms, self.truncation)
        self.phi, self.beta = self.law.char_fn(self.omega, self.dt)
        self.dphi_dsigma = self.law.char_fn_dsigma(self.omega, self.dt)
        self.discount = float(np.exp(-model.market.r * self.dt))
        self.weights = primed_weights(n_terms)

        self.scan_grid = np.linspace(self.truncation.a, self.truncation.b, config.effective_scan_points)
        self._scan_basis = continuation_basis(self.scan_grid, self.phi, self.beta, self.truncation)
        self.kernel = ContinuationKernel(self.beta, n_terms, self.truncation, use_fft=config.use_fft)

        self._table: Optional[CoefficientTable] = None
        self._runtime = 0.0

    # ─── Backward Induction ──────────────────────────────────────────────

    def _reachable(self, m: int) -> np.ndarray:
        """Level indices that can hold at t_m (m − 1 actions after t_1) from e_start."""
        n_levels = self.spec.grid.n_levels
        if not self.config.prune_unreachable:
            return np.arange(n_levels + 1)
        delta = self.spec.grid.delta
        lowest = min(ceil_steps(self.spec.i_min_op, delta), 0)
        highest = max(floor_steps(self.spec.i_max_op, delta), 0)
        start = self.spec.start_index
        lo = max(0, start + (m - 1) * lowest)
        hi = min(n_levels, start + (m - 1) * highest)
        return np.arange(lo, hi + 1)

    def _continuation_fn(self, v_next: np.ndarray):
        def continuation(y, j):
            values = self.discount * (continuation_basis(y, self.phi, self.beta, self.truncation) @ v_next[j]).real
            return float(values[0]) if np.ndim(y) == 0 else values
        return continuation

    def _assemble_level(self, m: int, j: int, z_next: np.ndarray, scan_values: np.ndarray,
                        continuation) -> tuple:
        spec, cfg, tr = self.spec, self.config, self.truncation
        partition = find_switch_partition(
            spec, self.model.price_map, j, continuation, tr,
            scan_points=cfg.effective_scan_points, tol_interval=cfg.tol_interval,
            scan_values=scan_values,
        )
        row = np.zeros(cfg.n_terms)
        for x1, x2, n in partition.intervals:
            if x2 <= x1:
                continue
            row += payoff_coefficients_G(spec, self.model.price_map, x1, x2, n, cfg.n_terms, tr)
            row += self.kernel.coefficients(z_next[j + n], x1, x2, self.discount)
            row += penalty_coefficients_Q(spec, x1, x2, n, cfg.n_terms, tr)
        if not np.all(np.isfinite(row)):
            level = float(spec.grid.levels[j])
            logger.error(f"❌ Non-finite coefficients at m={m}, e={level}")
            raise NumericException("non-finite value coefficients", time_index=m, energy_level=level)
        return j, row, partition

    def backward_induction(self) -> CoefficientTable:
        """Fill V_k(t_m, e) for m = M+1 .. 1."""
        if self._table is not None:
            return self._table

        spec, cfg = self.spec, self.config
        n_exercise = spec.time.n_exercise
        n_levels = spec.grid.n_levels
        started = time.perf_counter()
        logger.info(
            f"🚀 COS backward induction '{spec.name}': N={cfg.n_terms}, M={n_exercise}, "
            f"levels={n_levels + 1}, [a, b]=[{self.truncation.a:.4f}, {self.truncation.b:.4f}], β={self.beta:.6f}"
        )

        values = np.zeros((n_exercise + 2, n_levels + 1, cfg.n_terms))
        values[n_exercise + 1] = terminal_coefficients(spec, cfg.n_terms)
        partitions = {}

        with Parallel(n_jobs=cfg.n_jobs, prefer="threads") as parallel:
            for m in range(n_exercise, 0, -1):
                v_next = values[m + 1]
                z_next = self.weights * v_next * self.phi
                scan_values = self.discount * (self._scan_basis @ v_next.T).real
                continuation = self._continuation_fn(v_next)

                rows = parallel(
                    delayed(self._assemble_level)(m, int(j), z_next, scan_values, continuation)
                    for j in self._reachable(m)
                )
                for j, row, partition in rows:
                    values[m, j] = row
                    partitions[(m, j)] = partition
                logger.debug(
                    f"   step m={m}: {len(rows)} levels, "
                    f"{sum(len(p.steps) for _, _, p in rows)} subintervals"
                )

        self._runtime = time.perf_counter() - started
        self._table = CoefficientTable(values=values, truncation=self.truncation, dt=self.dt, partitions=partitions)
        logger.info(f"✅ Backward induction done in {self._runtime:.2f}s")
        return self._table

    # ─── Valuation ───────────────────────────────────────────────────────

    def _state(self, s: float) -> float:
        return map_inverse(self.model.price_map, s)

    def value_at(self, s: float, e: float, t_index: int = 0) -> float:
        """v(t_index, s, e) from the cached table (no recomputation)."""
        table = self.backward_induction()
        self._check_time_index(t_index)
        j = level_index(self.spec, e)
        x = self._state(s)
        basis = continuation_basis(x, self.phi, self.beta, self.truncation)
        return float(self.discount * (basis @ table.at(t_index + 1, j)).real[0])

    def value(self, with_greeks: bool = False) -> ValuationResult:
        table = self.backward_induction()
        spec = self.spec
        x0 = self.model.ou.x0
        basis = continuation_basis(x0, self.phi, self.beta, self.truncation)
        per_level = self.discount * (basis @ table.values[1].T).real[0]

        reachable = set(self._reachable(1).tolist())
        values_per_level = [
            float(v) if j in reachable else float("nan") for j, v in enumerate(per_level)
        ]
        start = spec.start_index
        greeks = self.greeks_at(0, self.model.spot0, spec.e_start) if with_greeks else None

        partitions = list(table.partitions.values())
        diagnostics = {
            "partitions": float(len(partitions)),
            "mean_subintervals": float(np.mean([len(p.steps) for p in partitions])) if partitions else 0.0,
            "max_subintervals": float(max((len(p.steps) for p in partitions), default=0)),
            "beta": self.beta,
        }
        return ValuationResult(
            contract=spec.name,
            sigma=self.law.sigma,
            n_terms=self.config.n_terms,
            spot0=self.model.spot0,
            e_start=spec.e_start,
            value_at_start=values_per_level[start],
            levels=[float(e) for e in spec.grid.levels],
            values_per_level=values_per_level,
            greeks=greeks,
            truncation=(self.truncation.a, self.truncation.b),
            diagnostics=diagnostics,
        )

    # ─── Greeks ──────────────────────────────────────────────────────────

    def _check_time_index(self, t_index: int) -> None:
        if not 0 <= t_index <= self.spec.time.n_exercise:
            raise ParameterDomainException(
                f"t_index={t_index} outside [0, {self.spec.time.n_exercise}]"
            )

    def greeks_at(self, t_index: int, s: float, e: float) -> Greeks:
        """
        Δ, Γ, ν at (t_index, s, e) from V_k(t_{index+1}, e).

        Raises:
            SingularDerivativeException: when Φ'(Φ⁻¹(s)) vanishes.
        """
        self._check_time_index(t_index)
        table = self.backward_induction()
        j = level_index(self.spec, e)
        coeffs = table.at(t_index + 1, j)

        x = self._state(s)
        slope = float(map_d1(self.model.price_map, x))
        if abs(slope) < self.SINGULAR_SLOPE:
            raise SingularDerivativeException(f"Φ'(x)=0 at x={x} (s={s})", details={"s": s, "x": x})
        curvature = float(map_d2(self.model.price_map, x))

        phase = np.exp(1j * self.omega * (self.beta * x - self.truncation.a))
        terms = self.weights * self.phi * phase * coeffs
        scaled = 1j * self.omega * self.beta
        v_x = self.discount * np.sum(scaled * terms).real
        v_xx = self.discount * np.sum(scaled * scaled * terms).real
        vega = self.discount * np.sum(self.weights * self.dphi_dsigma * phase * coeffs).real

        dx_ds = 1.0 / slope
        d2x_ds2 = -curvature / slope ** 3
        return Greeks(
            t_index=t_index, s=s, e=e,
            delta=float(v_x * dx_ds),
            gamma=float(v_xx * dx_ds ** 2 + v_x * d2x_ds2),
            vega=float(vega),
        )

    def greeks_surface(self, t_index: int, prices: Sequence[float],
                       levels: Optional[Sequence[float]] = None) -> List[Greeks]:
        """Greeks over prices × levels (all grid levels by default)."""
        levels = self.spec.grid.levels if levels is None else levels
        return [self.greeks_at(t_index, float(s), float(e)) for e in levels for s in prices]


# ─── Functional Entry Points ────────────────────────────────────────────


def backward_induction(spec: ContractSpec, model: PriceModel, config: CosConfig,
                       with_greeks: bool = False) -> ValuationResult:
    return CosStoragePricer(spec, model, config).value(with_greeks=with_greeks)


def greeks_at(spec: ContractSpec, model: PriceModel, config: CosConfig,
              t_index: int, s: float, e: float) -> Greeks:
    return CosStoragePricer(spec, model, config).greeks_at(t_index, s, e)


def greeks_surface(spec: ContractSpec, model: PriceModel, config: CosConfig,
                   t_index: int, prices: Sequence[float]) -> List[Greeks]:
    return CosStoragePricer(spec, model, config).greeks_surface(t_index, prices)


def full_vega_fd(spec: ContractSpec, model: PriceModel, config: CosConfig, h: float = None) -> float:
    """
    Central difference of v(t0, S0, e_start) in σ through the whole backward
    induction (truncation range included); compare with ν at fixed coefficients.
    """
    h = h if h is not None else CosStoragePricer.DEFAULT_VEGA_BUMP
    sigma = model.ou.sigma
    if h <= 0.0 or h >= sigma:
        raise ParameterDomainException(f"bump h={h} must lie in (0, σ={sigma})")
    up = CosStoragePricer(spec, model.with_sigma(sigma + h), config).value().value_at_start
    down = CosStoragePricer(spec, model.with_sigma(sigma - h), config).value().value_at_start
    return (up - down) / (2.0 * h)
