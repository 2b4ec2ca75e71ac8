"""
Contract data model: exercise dates, energy grid, rate limits and penalties.

Energy and rates are in MWh, money in EUR. Penalties are stored as the
(non-positive) amounts added to contract value.
"""

import math
from typing import Literal, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from typing_extensions import Annotated

# Relative slack when checking that a bound is a multiple of the grid spacing
GRID_TOLERANCE = 1e-9


class TimeGrid(BaseModel):
    """Equidistant exercise dates t_m = t0 + m·dt, m = 0..M, settlement at T + dt."""
    model_config = ConfigDict(frozen=True)

    t0: float = 0.0
    maturity: float = Field(..., description="T (years)")
    n_exercise: int = Field(..., ge=1, description="M, number of exercise steps")

    @model_validator(mode="after")
    def _ordered(self) -> "TimeGrid":
        if not self.maturity > self.t0:
            raise ValueError(f"maturity {self.maturity} must be after t0 {self.t0}")
        return self

    @property
    def dt(self) -> float:
        return (self.maturity - self.t0) / self.n_exercise

    @property
    def settlement(self) -> float:
        return self.maturity + self.dt

    @property
    def times(self) -> np.ndarray:
        """t_0 .. t_{M+1}, the last one being the settlement date."""
        return self.t0 + self.dt * np.arange(self.n_exercise + 2)


class EnergyGrid(BaseModel):
    """Energy levels e_min + j·δ, j = 0..N_e."""
    model_config = ConfigDict(frozen=True)

    e_min: float = 0.0
    e_max: float
    delta: float = Field(1.0, gt=0)

    @model_validator(mode="after")
    def _divisible(self) -> "EnergyGrid":
        if not self.e_max > self.e_min:
            raise ValueError(f"e_max {self.e_max} must exceed e_min {self.e_min}")
        ratio = (self.e_max - self.e_min) / self.delta
        if abs(ratio - round(ratio)) > GRID_TOLERANCE * max(1.0, ratio):
            raise ValueError(f"capacity {self.e_max - self.e_min} is not a multiple of delta {self.delta}")
        return self

    @property
    def n_levels(self) -> int:
        """N_e: the number of spacings, so there are N_e + 1 levels."""
        return int(round((self.e_max - self.e_min) / self.delta))

    @property
    def levels(self) -> np.ndarray:
        return self.e_min + self.delta * np.arange(self.n_levels + 1)

    def to_steps(self, amount: float) -> float:
        return amount / self.delta

    def index_of(self, e: float) -> int:
        """Grid index j of level e, or -1 when e is not a grid point."""
        j = (e - self.e_min) / self.delta
        nearest = int(round(j))
        if abs(j - nearest) > GRID_TOLERANCE * max(1.0, abs(j)) or not 0 <= nearest <= self.n_levels:
            return -1
        return nearest


# ─── Settlement Penalties ───────────────────────────────────────────────


class ThresholdConstant(BaseModel):
    """Pays `penalty` when e < threshold, else nothing."""
    model_config = ConfigDict(frozen=True)

    kind: Literal["threshold"] = "threshold"
    threshold: float
    penalty: float = Field(0.0, le=0)

    def value(self, e: float, e_max: float) -> float:
        return self.penalty if e < self.threshold else 0.0


class PiecewiseLinear(BaseModel):
    """−slope_penalty·(e_max − e)/(e_max − e_fix) above e_fix, −floor_penalty below."""
    model_config = ConfigDict(frozen=True)

    kind: Literal["piecewise_linear"] = "piecewise_linear"
    e_fix: float
    slope_penalty: float = Field(..., ge=0)
    floor_penalty: float = Field(..., ge=0)

    def value(self, e: float, e_max: float) -> float:
        if e < self.e_fix:
            return -self.floor_penalty
        if e_max == self.e_fix:
            return 0.0
        return -self.slope_penalty * (e_max - e) / (e_max - self.e_fix)


SettlementPenalty = Annotated[Union[ThresholdConstant, PiecewiseLinear], Field(discriminator="kind")]


class ContractSpec(BaseModel):
    """
    Storage contract characteristics.

    Structural checks live here; the contract invariants (rate ordering,
    starting level, efficiency, grid multiples) are checked by
    `validators.contract_validator.validate_spec`, which reports them all.
    """
    model_config = ConfigDict(frozen=True)

    name: str = "contract"
    time: TimeGrid
    grid: EnergyGrid
    e_start: float
    i_min_op: float
    i_max_op: float
    i_min_market: float = -0.1
    i_min_b: float
    i_max_b: float
    eta: float = 1.0
    q_b_value: float = 0.0
    settlement: SettlementPenalty = ThresholdConstant(threshold=0.0, penalty=0.0)

    @property
    def start_index(self) -> int:
        return self.grid.index_of(self.e_start)

    def settlement_value(self, e: float) -> float:
        return self.settlement.value(e, self.grid.e_max)


class Action(BaseModel):
    """Energy change Δe = e(t_{m+1}) − e(t_m), a signed multiple of δ."""
    model_config = ConfigDict(frozen=True)

    de: float

    @property
    def is_inaction(self) -> bool:
        return self.de == 0.0


def floor_steps(amount: float, delta: float) -> int:
    """Largest n with n·δ ≤ amount (up to grid tolerance)."""
    return int(math.floor(amount / delta + GRID_TOLERANCE))


def ceil_steps(amount: float, delta: float) -> int:
    """Smallest n with n·δ ≥ amount (up to grid tolerance)."""
    return int(math.ceil(amount / delta - GRID_TOLERANCE))
