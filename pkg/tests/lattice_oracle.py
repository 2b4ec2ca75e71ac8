"""
Reference values for storage contracts with two exercise dates.

Brute-force dynamic programme over every action pair. After the last
decision the value is the upper envelope of affine functions of the spot,
so its conditional expectation is taken in closed form piece by piece
(Gaussian partial moments); the outer expectation over X_{t1} uses a fine
trapezoid rule. Quadratic price maps only.
"""
from typing import List, Tuple

import numpy as np
from scipy.stats import norm

from src.app.models.contract_model import ContractSpec, EnergyGrid, ThresholdConstant, TimeGrid
from src.app.models.price_model import MarketParams, OUParams, PriceModel
from src.app.services.contract.contract_service import allowed_steps, step_payoff, step_penalty
from src.app.services.price_model.ou_process import ou_moments
from src.app.services.price_model.polynomial_map import build_map, second_order_factors

OUTER_NODES = 20001
OUTER_WIDTH = 10.0


def lattice_contract(eta: float = 0.9, sigma: float = 1.2) -> Tuple[ContractSpec, PriceModel]:
    """Four levels, two exercise dates, rapidity penalty and a settlement threshold."""
    spec = ContractSpec(
        name="lattice",
        time=TimeGrid(t0=0.0, maturity=1.0, n_exercise=2),
        grid=EnergyGrid(e_min=0.0, e_max=3.0, delta=1.0),
        e_start=1.0,
        i_min_op=-2.0, i_max_op=2.0,
        i_min_b=-1.0, i_max_b=1.0,
        eta=eta, q_b_value=-0.5,
        settlement=ThresholdConstant(threshold=1.0, penalty=-20.0),
    )
    model = PriceModel(
        price_map=build_map(second_order_factors(0.5)),
        ou=OUParams(kappa=0.3, theta=10.1, sigma=sigma, x0=10.0),
        market=MarketParams(r=0.01),
    )
    return spec, model


def degenerate_contract(n_exercise: int = 5) -> ContractSpec:
    """Only inaction is allowed; the value is the discounted settlement penalty −100."""
    return ContractSpec(
        name="degenerate",
        time=TimeGrid(t0=0.0, maturity=1.0, n_exercise=n_exercise),
        grid=EnergyGrid(e_min=0.0, e_max=2.0, delta=1.0),
        e_start=1.0,
        i_min_op=0.0, i_max_op=0.0, i_min_market=0.0, i_min_b=0.0, i_max_b=0.0,
        settlement=ThresholdConstant(threshold=2.0, penalty=-100.0),
    )


def _upper_envelope(slopes: np.ndarray, intercepts: np.ndarray) -> Tuple[List[int], List[float]]:
    """Lines on the upper envelope from left to right and the spots where they hand over."""
    order = np.lexsort((intercepts, slopes))
    hull: List[int] = []
    for i in order:
        if hull and slopes[hull[-1]] == slopes[i]:
            hull.pop()
        while len(hull) >= 2:
            i1, i2 = hull[-2], hull[-1]
            x12 = (intercepts[i1] - intercepts[i2]) / (slopes[i2] - slopes[i1])
            x13 = (intercepts[i1] - intercepts[i]) / (slopes[i] - slopes[i1])
            if x13 <= x12:
                hull.pop()
            else:
                break
        hull.append(int(i))
    breaks = [
        float((intercepts[left] - intercepts[right]) / (slopes[right] - slopes[left]))
        for left, right in zip(hull, hull[1:])
    ]
    return hull, breaks


def _right_branch_inverse(p1: float, p2: float, s: float) -> float:
    """Largest root of p2·y² + p1·y = s, clipped to the vertex of Φ."""
    if p2 == 0.0:
        return s / p1
    vertex = -p1 / (2.0 * p2)
    floor = p2 * vertex * vertex + p1 * vertex
    if s <= floor:
        return vertex
    return (-p1 + np.sqrt(p1 * p1 + 4.0 * p2 * s)) / (2.0 * p2)


def _partial_moments(mean: np.ndarray, sd: float, lower: float, upper: float):
    """E[1], E[Y], E[Y²] restricted to lower < Y < upper for Y ~ N(mean, sd²)."""
    alpha = (lower - mean) / sd
    beta = (upper - mean) / sd
    pdf_a, pdf_b = norm.pdf(alpha), norm.pdf(beta)
    prob = norm.cdf(beta) - norm.cdf(alpha)
    with np.errstate(invalid="ignore"):
        a_pdf = np.where(np.isfinite(alpha), alpha * pdf_a, 0.0)
        b_pdf = np.where(np.isfinite(beta), beta * pdf_b, 0.0)
    ez = pdf_a - pdf_b
    ez2 = prob + a_pdf - b_pdf
    first = mean * prob + sd * ez
    second = mean * mean * prob + 2.0 * mean * sd * ez + sd * sd * ez2
    return prob, first, second


def lattice_value(spec: ContractSpec, model: PriceModel) -> float:
    """v(t0, S0, e_start) of a two-date contract by exhaustive dynamic programming."""
    if spec.time.n_exercise != 2:
        raise ValueError("the lattice oracle handles exactly two exercise dates")
    coeffs = list(model.price_map.coeffs) + [0.0]
    p1, p2 = coeffs[1], coeffs[2]
    if len(model.price_map.coeffs) > 3:
        raise ValueError("the lattice oracle handles quadratic price maps only")

    dt = spec.time.dt
    discount = float(np.exp(-model.market.r * dt))
    levels = spec.grid.levels
    settlement = np.array([spec.settlement_value(e) for e in levels])

    # t2: value after the last decision is max_n (c_n + d_n·S)
    envelopes = []
    for j in range(levels.size):
        steps = allowed_steps(spec, j)
        slopes = np.array([float(step_payoff(spec, 1.0, int(n))) for n in steps])
        intercepts = np.array([step_penalty(spec, int(n)) + discount * settlement[j + n] for n in steps])
        hull, breaks = _upper_envelope(slopes, intercepts)
        bounds = [-np.inf] + [_right_branch_inverse(p1, p2, s) for s in breaks] + [np.inf]
        envelopes.append([(intercepts[i], slopes[i], bounds[k], bounds[k + 1]) for k, i in enumerate(hull)])

    def expected_v2(x: np.ndarray, j: int) -> np.ndarray:
        mean, variance = ou_moments(model.ou, dt, x)
        sd = float(np.sqrt(variance))
        total = np.zeros_like(x)
        for intercept, slope, lower, upper in envelopes[j]:
            if upper <= lower:
                continue
            prob, first, second = _partial_moments(mean, sd, lower, upper)
            total += intercept * prob + slope * (p1 * first + p2 * second)
        return total

    # t1: decide from e_start given X_{t1} = x
    mean1, variance1 = ou_moments(model.ou, dt, model.ou.x0)
    sd1 = float(np.sqrt(variance1))
    z = np.linspace(-OUTER_WIDTH, OUTER_WIDTH, OUTER_NODES)
    x = float(mean1) + sd1 * z
    spot = model.price_map.polynomial(x)

    j0 = spec.start_index
    candidates = np.vstack([
        step_payoff(spec, spot, int(n)) + step_penalty(spec, int(n)) + discount * expected_v2(x, j0 + int(n))
        for n in allowed_steps(spec, j0)
    ])
    v1 = candidates.max(axis=0)

    weights = norm.pdf(z) * (z[1] - z[0])
    weights[0] *= 0.5
    weights[-1] *= 0.5
    return float(discount * np.sum(weights * v1))
