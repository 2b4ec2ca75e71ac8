"""
Construction, evaluation and inversion of increasing polynomial maps Φ.

Φ(x) = ∫₀ˣ ∏_k q̃_{α_k,γ_k}(u) du with every q̃ non-negative on [0, ∞),
so Φ(0) = 0 and Φ is increasing on the half line. Φ is a global polynomial
and is evaluated as-is below 0 (the truncation range may dip there).
"""

import logging
import math
from typing import Iterable, Union

import numpy as np
from numpy.polynomial import Polynomial
from scipy.optimize import brentq

from src.app.exceptions.custom_exceptions import NumericException, ParameterDomainException
from src.app.models.price_model import PolynomialMap, QuadraticFactor, quadratic_is_non_negative

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

INVERSE_RTOL = 1e-12
NEWTON_POLISH_STEPS = 3
MAX_BRACKET_DOUBLINGS = 200


def quadratic_from_polar(xi: float, r_hat: float) -> QuadraticFactor:
    """(ξ, r̂) ↦ (α, γ) = (r̂ cos ξ, r̂ sin ξ) over the admissible polar region."""
    if not 0.0 <= xi <= math.pi / 2 + 1e-15:
        raise ParameterDomainException(f"xi={xi} outside [0, π/2]")
    bound = math.cos(xi) + math.sin(xi) + math.sqrt(max(math.sin(2.0 * xi), 0.0))
    if r_hat < 0.0 or r_hat > bound + 1e-12:
        raise ParameterDomainException(
            f"r_hat={r_hat} outside [0, {bound:.12g}] for xi={xi}",
            details={"xi": xi, "r_hat": r_hat, "bound": bound}
        )
    alpha = r_hat * math.cos(xi)
    gamma = r_hat * math.sin(xi)
    if not quadratic_is_non_negative(alpha, gamma, tol=1e-9):
        raise ParameterDomainException(f"(α={alpha}, γ={gamma}) is not a non-negative quadratic")
    # Points on the boundary of the region may miss the strict validator by rounding
    return QuadraticFactor.model_construct(alpha=alpha, gamma=gamma)


def second_order_factors(gamma: float) -> list:
    """Single factor (α=0, γ) giving Φ(x) = ((1−γ)/2)x² + γx."""
    try:
        return [QuadraticFactor(alpha=0.0, gamma=gamma)]
    except ValueError as e:
        raise ParameterDomainException(f"gamma={gamma} does not give an increasing map", details=str(e))


def quadratic_normalization(factor: QuadraticFactor) -> float:
    """∫₀^∞ e^{−x} q̃(x) dx in closed form (∫ x^n e^{−x} = n!)."""
    # (α/2)·2! + (1−α−γ)·1! + γ·0!
    return factor.alpha + (1.0 - factor.alpha - factor.gamma) + factor.gamma


def build_map(factors: Iterable[QuadraticFactor]) -> PolynomialMap:
    """Expand ∏ q̃_k and integrate from 0: exact coefficient vector p of Φ."""
    factors = tuple(factors)
    derivative = Polynomial([1.0])
    for factor in factors:
        derivative = derivative * factor.polynomial
    primitive = derivative.integ(m=1, k=[0.0], lbnd=0.0)
    coeffs = np.trim_zeros(primitive.coef, trim="b")
    if coeffs.size < 2:
        coeffs = np.array([0.0, 0.0])
    coeffs[0] = 0.0
    price_map = PolynomialMap(factors=factors, coeffs=tuple(float(c) for c in coeffs))
    logger.debug(f"🧮 Built map of degree {price_map.degree}: p={price_map.coeffs}")
    return price_map


def map_eval(price_map: PolynomialMap, x: ArrayLike) -> ArrayLike:
    return price_map.polynomial(x)


def map_d1(price_map: PolynomialMap, x: ArrayLike) -> ArrayLike:
    return price_map.polynomial.deriv(1)(x)


def map_d2(price_map: PolynomialMap, x: ArrayLike) -> ArrayLike:
    return price_map.polynomial.deriv(2)(x)


def map_inverse(price_map: PolynomialMap, s: float, upper: float = None) -> float:
    """
    x ≥ 0 with Φ(x) = s.

    Degree ≤ 2 uses the stable closed-form root; higher degrees bracket the
    root on [0, upper] (expanded by doubling when needed), solve with Brent's
    safeguarded bisection and polish with Newton.
    """
    if s < 0.0:
        raise ParameterDomainException(f"spot price {s} < 0 has no preimage on [0, ∞)")
    if s == 0.0:
        return 0.0

    coeffs = np.asarray(price_map.coeffs, dtype=float)
    if price_map.degree <= 2:
        p1 = coeffs[1]
        p2 = coeffs[2] if coeffs.size > 2 else 0.0
        if p2 == 0.0:
            if p1 <= 0.0:
                raise NumericException("map is not strictly increasing at 0")
            return s / p1
        # 2s / (p1 + √(p1² + 4 p2 s)) avoids cancellation for small s
        return 2.0 * s / (p1 + math.sqrt(p1 * p1 + 4.0 * p2 * s))

    poly = price_map.polynomial
    dpoly = poly.deriv(1)
    hi = upper if upper is not None and upper > 0.0 else 1.0
    doublings = 0
    while poly(hi) < s:
        hi *= 2.0
        doublings += 1
        if doublings > MAX_BRACKET_DOUBLINGS:
            raise NumericException(f"could not bracket Φ⁻¹({s})")

    tolerance = INVERSE_RTOL * max(1.0, s)
    x = brentq(lambda y: poly(y) - s, 0.0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    for _ in range(NEWTON_POLISH_STEPS):
        slope = dpoly(x)
        if slope <= 0.0:
            break
        step = (poly(x) - s) / slope
        if not 0.0 <= x - step <= hi:
            break
        x -= step
    if abs(poly(x) - s) > tolerance:
        raise NumericException(f"Φ⁻¹({s}) did not converge: residual {poly(x) - s:.3e}")
    return float(x)
