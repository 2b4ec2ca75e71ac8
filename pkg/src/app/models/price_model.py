"""
Domain models of the structural spot-price model S_t = Φ(X_t).

All models are frozen: they are built once (from a run configuration or in
tests) and shared read-only by the engines, across threads.
"""

import math
from typing import Tuple

import numpy as np
from numpy.polynomial import Polynomial
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

# Slack for floating-point checks of the factor invariants
FACTOR_TOLERANCE = 1e-12


class OUParams(BaseModel):
    """Ornstein-Uhlenbeck factor dX = κ(θ − X)dt + σ dW."""
    model_config = ConfigDict(frozen=True)

    kappa: float = Field(..., gt=0, description="Mean-reversion rate (1/time)")
    theta: float = Field(..., description="Long-run mean (X units)")
    sigma: float = Field(..., gt=0, description="Volatility (X units / sqrt(time))")
    x0: float = Field(..., description="Initial state (X units)")


class MarketParams(BaseModel):
    """Discounting parameters."""
    model_config = ConfigDict(frozen=True)

    r: float = Field(0.0, ge=0, description="Continuously compounded risk-free rate (1/time)")


class QuadraticFactor(BaseModel):
    """
    One non-negative quadratic q̃(x) = (α/2)x² + (1−α−γ)x + γ of the map's derivative.
    """
    model_config = ConfigDict(frozen=True)

    alpha: float
    gamma: float

    @model_validator(mode="after")
    def _non_negative_on_half_line(self) -> "QuadraticFactor":
        if not quadratic_is_non_negative(self.alpha, self.gamma):
            raise ValueError(
                f"q̃(x) = ({self.alpha}/2)x² + ({1 - self.alpha - self.gamma})x + {self.gamma} "
                f"takes negative values on [0, ∞)"
            )
        return self

    @property
    def polynomial(self) -> Polynomial:
        return Polynomial([self.gamma, 1.0 - self.alpha - self.gamma, 0.5 * self.alpha])


def quadratic_is_non_negative(alpha: float, gamma: float, tol: float = FACTOR_TOLERANCE) -> bool:
    """True when (α/2)x² + (1−α−γ)x + γ ≥ 0 for every x ≥ 0."""
    linear = 1.0 - alpha - gamma
    if gamma < -tol or alpha < -tol:
        return False
    if abs(alpha) <= tol:
        return linear >= -tol
    vertex = -linear / alpha
    if vertex <= 0.0:
        return True
    minimum = gamma - linear * linear / (2.0 * alpha)
    return minimum >= -tol * max(1.0, abs(gamma))


class PolynomialMap(BaseModel):
    """
    Increasing polynomial map Φ(x) = ∫₀ˣ ∏ q̃_k(u) du.

    `coeffs` holds p in the monomial basis H(x) = (1, x, x², …); build it with
    `services.price_model.polynomial_map.build_map`.
    """
    model_config = ConfigDict(frozen=True)

    factors: Tuple[QuadraticFactor, ...] = ()
    coeffs: Tuple[float, ...] = (0.0, 1.0)

    @field_validator("coeffs")
    @classmethod
    def _anchored_at_zero(cls, value: Tuple[float, ...]) -> Tuple[float, ...]:
        if len(value) < 2:
            raise ValueError("Φ must have degree ≥ 1")
        if value[0] != 0.0:
            raise ValueError("Φ(0) must be 0")
        return value

    @property
    def polynomial(self) -> Polynomial:
        return Polynomial(np.asarray(self.coeffs, dtype=float))

    @property
    def degree(self) -> int:
        return int(np.max(np.nonzero(np.asarray(self.coeffs))[0]))


class TruncationRange(BaseModel):
    """Integration range [a, b] of the cosine expansions, with the cumulants it came from."""
    model_config = ConfigDict(frozen=True)

    a: float
    b: float
    l_bar: float = Field(..., gt=0)
    kappa1: float
    kappa2: float = Field(..., ge=0)
    kappa4: float = 0.0

    @model_validator(mode="after")
    def _ordered(self) -> "TruncationRange":
        if not self.a < self.b:
            raise ValueError(f"empty truncation range [{self.a}, {self.b}]")
        return self

    @property
    def width(self) -> float:
        return self.b - self.a

    def contains(self, x: float) -> bool:
        return self.a <= x <= self.b


class PathEnsemble(BaseModel):
    """Simulated OU states on a time grid; states[:, 0] == x0."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    n_paths: int = Field(..., ge=1)
    times: np.ndarray
    states: np.ndarray
    seed: int

    @model_validator(mode="after")
    def _shapes(self) -> "PathEnsemble":
        if self.states.shape != (self.n_paths, self.times.shape[0]):
            raise ValueError(
                f"states shape {self.states.shape} does not match "
                f"({self.n_paths}, {self.times.shape[0]})"
            )
        if not np.all(np.isfinite(self.states)):
            raise ValueError("non-finite simulated state")
        return self


class PriceModel(BaseModel):
    """The full price model handed to the engines: Φ, the OU factor and the rate."""
    model_config = ConfigDict(frozen=True)

    price_map: PolynomialMap
    ou: OUParams
    market: MarketParams = MarketParams()

    @property
    def spot0(self) -> float:
        return float(self.price_map.polynomial(self.ou.x0))

    def with_sigma(self, sigma: float) -> "PriceModel":
        return self.model_copy(update={"ou": OUParams(**{**self.ou.model_dump(), "sigma": sigma})})

    def with_x0(self, x0: float) -> "PriceModel":
        if not math.isfinite(x0):
            raise ValueError("x0 must be finite")
        return self.model_copy(update={"ou": OUParams(**{**self.ou.model_dump(), "x0": x0})})
