"""
Switch-point partition of [a, b] for one (t_m, e).

h(y, n) = g(Φ(y), n) + ĉ(y, e + nδ) + q_b(n) is scanned on an equidistant
grid for every allowed step n. Where the argmax changes, the switch point
is refined with Brent's method on the difference of the two competing h's.
Subintervals shorter than TOL join their left neighbour (the first one
joins its right neighbour), then equal neighbours are merged.
"""

import logging
from typing import Callable, List, Optional

import numpy as np
from scipy.optimize import brentq

from src.app.models.contract_model import ContractSpec
from src.app.models.price_model import PolynomialMap, TruncationRange
from src.app.models.valuation_model import SwitchPartition
from src.app.services.contract.contract_service import allowed_steps, step_payoff, step_penalty

logger = logging.getLogger(__name__)

BREAKPOINT_XTOL = 1e-10

# ĉ(y, j_target) for a scalar or vector y
ContinuationFn = Callable[[np.ndarray, int], np.ndarray]


def candidate_steps(spec: ContractSpec, j: int) -> np.ndarray:
    """Allowed steps ordered by |n| so argmax ties go to the smallest move (inaction first)."""
    steps = allowed_steps(spec, j)
    return steps[np.lexsort((steps, np.abs(steps)))]


def objective(spec: ContractSpec, price_map: PolynomialMap, continuation: ContinuationFn,
              j: int, n: int, y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    return step_payoff(spec, price_map.polynomial(y), n) + continuation(y, j + n) + step_penalty(spec, n)


def merge_short_intervals(breakpoints: List[float], steps: List[int], tol: float):
    """Short subintervals join the left neighbour (the first one the right); then equal neighbours merge."""
    breakpoints, steps = list(breakpoints), list(steps)
    i = 0
    while len(steps) > 1 and i < len(steps):
        if breakpoints[i + 1] - breakpoints[i] < tol:
            if i == 0:
                del breakpoints[1]
                del steps[0]
            else:
                del breakpoints[i]
                del steps[i]
            continue
        i += 1

    i = 1
    while i < len(steps):
        if steps[i] == steps[i - 1]:
            del breakpoints[i]
            del steps[i]
        else:
            i += 1
    return breakpoints, steps


def find_switch_partition(
    spec: ContractSpec,
    price_map: PolynomialMap,
    j: int,
    continuation: ContinuationFn,
    truncation: TruncationRange,
    scan_points: int,
    tol_interval: float,
    scan_values: Optional[np.ndarray] = None,
) -> SwitchPartition:
    """
    Args:
        j: energy-level index of e
        continuation: ĉ(y, j') at t_m for the level reached after the action
        tol_interval: minimum subinterval length as a fraction of b − a
        scan_values: optional ĉ on the scan grid, shape (scan_points, N_e + 1)
    """
    a, b = truncation.a, truncation.b
    steps = candidate_steps(spec, j)
    if steps.size == 1:
        return SwitchPartition(breakpoints=(a, b), steps=(int(steps[0]),))

    ys = np.linspace(a, b, scan_points)
    spot = price_map.polynomial(ys)
    if scan_values is None:
        scan_values = np.column_stack([continuation(ys, jj) for jj in range(spec.grid.n_levels + 1)])
    h = np.vstack([
        step_payoff(spec, spot, n) + scan_values[:, j + n] + step_penalty(spec, n)
        for n in steps
    ])
    best = np.argmax(h, axis=0)

    breakpoints = [a]
    chosen = [int(steps[best[0]])]
    for i in np.nonzero(best[1:] != best[:-1])[0]:
        left, right = int(steps[best[i]]), int(steps[best[i + 1]])

        def gap(y, left=left, right=right):
            return float(objective(spec, price_map, continuation, j, left, y)
                         - objective(spec, price_map, continuation, j, right, y))

        lo, hi = ys[i], ys[i + 1]
        f_lo, f_hi = gap(lo), gap(hi)
        if f_lo * f_hi < 0.0:
            switch = brentq(gap, lo, hi, xtol=BREAKPOINT_XTOL * truncation.width)
        else:
            switch = lo if f_lo == 0.0 else (hi if f_hi == 0.0 else 0.5 * (lo + hi))
        breakpoints.append(float(switch))
        chosen.append(right)
    breakpoints.append(b)

    breakpoints, chosen = merge_short_intervals(breakpoints, chosen, tol_interval * truncation.width)
    return SwitchPartition(breakpoints=tuple(breakpoints), steps=tuple(chosen))
