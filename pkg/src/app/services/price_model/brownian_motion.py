"""
Arithmetic Brownian motion dX = μ dt + σ dW as a COS transition law.

Its increments are stationary and independent, so the state factor β is 1
and the continuation matrices get Toeplitz/Hankel structure.
"""

from typing import Tuple

import numpy as np

from src.app.exceptions.custom_exceptions import ParameterDomainException
from src.app.models.price_model import TruncationRange


class ArithmeticBrownianLaw:
    """φ(u|Δt) = exp(iuμΔt − ½σ²u²Δt), β = 1."""

    def __init__(self, mu: float, sigma: float, x0: float):
        if sigma <= 0.0:
            raise ParameterDomainException(f"sigma={sigma} must be > 0")
        self.mu = mu
        self._sigma = sigma
        self.x0 = x0

    @property
    def sigma(self) -> float:
        return self._sigma

    def char_fn(self, u, dt: float) -> Tuple[np.ndarray, float]:
        if dt <= 0.0:
            raise ParameterDomainException(f"dt={dt} must be > 0")
        u = np.asarray(u, dtype=float)
        return np.exp(1j * u * self.mu * dt - 0.5 * self._sigma ** 2 * u * u * dt), 1.0

    def char_fn_dsigma(self, u, dt: float) -> np.ndarray:
        phi, _ = self.char_fn(u, dt)
        u = np.asarray(u, dtype=float)
        return -phi * self._sigma * u * u * dt

    def moments(self, dt, x_start):
        dt = np.asarray(dt, dtype=float)
        return x_start + self.mu * dt, self._sigma ** 2 * dt

    def truncation_range(self, dt_total: float, l_bar: float) -> TruncationRange:
        mean, variance = self.moments(dt_total, self.x0)
        half_width = l_bar * float(np.sqrt(variance))
        return TruncationRange(
            a=float(mean) - half_width, b=float(mean) + half_width,
            l_bar=l_bar, kappa1=float(mean), kappa2=float(variance)
        )
