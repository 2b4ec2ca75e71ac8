"""
Engine configurations and results.

Coefficient arrays are numpy arrays, so the models that carry them allow
arbitrary types; everything that leaves the process goes through the
result repository.
"""

from typing import Dict, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.app.models.price_model import TruncationRange


# ─── COS Engine ─────────────────────────────────────────────────────────


class CosConfig(BaseModel):
    """
    COS pricer settings.

    - n_terms: N, cosine terms per expansion
    - tol_interval: minimum subinterval length as a fraction of b − a
    - scan_points: switch-point scan size, None → max(1000, 5N)
    - truncation_horizon: "full" (T + Δt − t0 from x0) or "one_step"
    - use_fft: Toeplitz/Hankel continuation products (β = 1 laws only)
    - prune_unreachable: skip levels not reachable from e_start
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    n_terms: int = Field(200, ge=16)
    l_bar: float = Field(10.0, gt=0)
    tol_interval: float = Field(1e-4, ge=0)
    scan_points: Optional[int] = Field(None, ge=2)
    truncation_horizon: Literal["full", "one_step"] = "full"
    use_fft: bool = False
    prune_unreachable: bool = False
    n_jobs: int = Field(1, ge=1)

    @property
    def effective_scan_points(self) -> int:
        return self.scan_points if self.scan_points is not None else max(1000, 5 * self.n_terms)


class SwitchPartition(BaseModel):
    """Breakpoints a = x_0 < … < x_{n+1} = b with one optimal step per subinterval."""
    model_config = ConfigDict(frozen=True)

    breakpoints: Tuple[float, ...]
    steps: Tuple[int, ...]

    @model_validator(mode="after")
    def _consistent(self) -> "SwitchPartition":
        if len(self.breakpoints) != len(self.steps) + 1:
            raise ValueError("a partition needs one more breakpoint than actions")
        if any(right < left for left, right in zip(self.breakpoints, self.breakpoints[1:])):
            raise ValueError("breakpoints must be non-decreasing")
        return self

    @property
    def intervals(self) -> List[Tuple[float, float, int]]:
        return [
            (self.breakpoints[i], self.breakpoints[i + 1], self.steps[i])
            for i in range(len(self.steps))
        ]


class MklBlock(BaseModel):
    """M^c and M^s of one subinterval; M = −(i/π)(M^s + M^c)."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    mc: np.ndarray
    ms: np.ndarray
    beta: float

    @property
    def combined(self) -> np.ndarray:
        return -1j / np.pi * (self.ms + self.mc)


class CoefficientTable(BaseModel):
    """
    V_k(t_m, e_j) for m = 1..M+1 in `values[m, j, k]` (row 0 is unused: the
    value at t0 is a continuation value), and the partitions that built them.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True)

    values: np.ndarray
    truncation: TruncationRange
    dt: float
    partitions: Dict[Tuple[int, int], SwitchPartition] = Field(default_factory=dict)

    @property
    def n_terms(self) -> int:
        return int(self.values.shape[2])

    def at(self, m: int, j: int) -> np.ndarray:
        return self.values[m, j]


class Greeks(BaseModel):
    """Δ = ∂v/∂S, Γ = ∂²v/∂S², ν = ∂v/∂σ at (t_index, s, e)."""
    model_config = ConfigDict(frozen=True)

    t_index: int = 0
    s: float
    e: float
    delta: float
    gamma: float
    vega: float

    @model_validator(mode="after")
    def _finite(self) -> "Greeks":
        if not all(np.isfinite([self.delta, self.gamma, self.vega])):
            raise ValueError(f"non-finite Greeks at s={self.s}, e={self.e}")
        return self


class ValuationResult(BaseModel):
    """v(t0, S0, e) for all levels, the headline value at e_start, and diagnostics."""
    model_config = ConfigDict(frozen=True)

    contract: str
    sigma: float
    n_terms: int
    spot0: float
    e_start: float
    value_at_start: float
    levels: List[float]
    values_per_level: List[float]
    greeks: Optional[Greeks] = None
    full_vega_fd: Optional[float] = None
    truncation: Tuple[float, float]
    diagnostics: Dict[str, float] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _start_value_consistent(self) -> "ValuationResult":
        if self.e_start in self.levels:
            j = self.levels.index(self.e_start)
            if not np.isclose(self.values_per_level[j], self.value_at_start, rtol=0.0, atol=1e-12):
                raise ValueError("value_at_start differs from the e_start entry of values_per_level")
        return self


# ─── LSMC Engine ────────────────────────────────────────────────────────


class LsmcConfig(BaseModel):
    """Monte Carlo settings; `seed` None means the process default seed."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    n_paths: int = Field(25_000, ge=100)
    n_runs: int = Field(10, ge=1)
    basis_degree: int = Field(3, ge=1)
    seed: Optional[int] = Field(None, ge=0)
    out_of_sample: bool = True
    n_jobs: int = Field(1, ge=1)


class PolicyStatistics(BaseModel):
    """Energy-level path statistics of the fitted policy and the usage of every action."""
    model_config = ConfigDict(frozen=True)

    times: List[float]
    mean_energy: List[float]
    ci_low: List[float]
    ci_high: List[float]
    min_energy: List[float]
    max_energy: List[float]
    # (time index, Δe) -> number of trajectories choosing it
    action_usage: Dict[Tuple[int, float], int]
    n_trajectories: int
    fraction_final_at_max: float

    def usage_rows(self) -> List[Tuple[float, float, int]]:
        return [(self.times[m], de, count) for (m, de), count in sorted(self.action_usage.items())]

    def total_usage(self) -> Dict[float, int]:
        totals: Dict[float, int] = {}
        for (_, de), count in self.action_usage.items():
            totals[de] = totals.get(de, 0) + count
        return dict(sorted(totals.items()))


class LsmcRun(BaseModel):
    """One LSMC run: in-sample estimate, its path standard error and the policy replay value."""
    model_config = ConfigDict(frozen=True)

    value: float
    std_error: float
    n_paths: int
    seed: int
    out_of_sample_value: Optional[float] = None


class LsmcResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    contract: str
    sigma: float
    value_mean: float
    ci_low: float
    ci_high: float
    runs: List[LsmcRun]
    policy: Optional[PolicyStatistics] = None

    @model_validator(mode="after")
    def _ordered(self) -> "LsmcResult":
        if not self.ci_low <= self.value_mean <= self.ci_high:
            raise ValueError(f"confidence interval [{self.ci_low}, {self.ci_high}] excludes {self.value_mean}")
        return self

    @property
    def out_of_sample_mean(self) -> Optional[float]:
        values = [run.out_of_sample_value for run in self.runs if run.out_of_sample_value is not None]
        return float(np.mean(values)) if values else None
