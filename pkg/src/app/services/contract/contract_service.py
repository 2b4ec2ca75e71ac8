"""
Action sets, payoff and penalties of a storage contract.

Engines work in integer steps n (Δe = n·δ) on level indices j; the
`*_actions` functions wrap those in MWh-valued `Action`s for callers.
Actions are enumerated in ascending Δe.
"""

import logging
from typing import List

import numpy as np

from src.app.exceptions.custom_exceptions import ActionException, GridException
from src.app.models.contract_model import Action, ContractSpec, ceil_steps, floor_steps

logger = logging.getLogger(__name__)


# ─── Grid Helpers ───────────────────────────────────────────────────────


def level_index(spec: ContractSpec, e: float) -> int:
    j = spec.grid.index_of(e)
    if j < 0:
        raise GridException(
            f"energy level {e} is not on the grid {spec.grid.e_min}:{spec.grid.delta}:{spec.grid.e_max}",
            details={"e": e}
        )
    return j


def _steps_within(spec: ContractSpec, j: int, lower: float, upper: float) -> np.ndarray:
    """Steps n with n·δ ∈ [lower, i_min_market] ∪ [0, upper] and 0 ≤ j + n ≤ N_e."""
    delta = spec.grid.delta
    release = np.arange(ceil_steps(lower, delta), min(floor_steps(spec.i_min_market, delta), -1) + 1)
    charge = np.arange(0, floor_steps(upper, delta) + 1)
    steps = np.concatenate([release, charge]).astype(int)
    reachable = (j + steps >= 0) & (j + steps <= spec.grid.n_levels)
    return steps[reachable]


def allowed_steps(spec: ContractSpec, j: int) -> np.ndarray:
    return _steps_within(spec, j, spec.i_min_op, spec.i_max_op)


def penalty_free_steps(spec: ContractSpec, j: int) -> np.ndarray:
    return _steps_within(spec, j, spec.i_min_b, spec.i_max_b)


def penalised_steps(spec: ContractSpec, j: int) -> np.ndarray:
    """A ∖ D at level j."""
    return np.setdiff1d(allowed_steps(spec, j), penalty_free_steps(spec, j))


# ─── Public Operations ──────────────────────────────────────────────────


def allowed_actions(spec: ContractSpec, e: float) -> List[Action]:
    j = level_index(spec, e)
    return [Action(de=float(n) * spec.grid.delta) for n in allowed_steps(spec, j)]


def penalty_free_actions(spec: ContractSpec, e: float) -> List[Action]:
    j = level_index(spec, e)
    return [Action(de=float(n) * spec.grid.delta) for n in penalty_free_steps(spec, j)]


def payoff(spec: ContractSpec, s, de: float):
    """Cash flow of changing the level by de at spot s: buy de/η when charging, sell −de when releasing."""
    if de > 0.0:
        return -np.asarray(s) * de / spec.eta
    if de < 0.0:
        return -np.asarray(s) * de
    return np.zeros_like(np.asarray(s, dtype=float))


def step_payoff(spec: ContractSpec, s, n: int):
    return payoff(spec, s, n * spec.grid.delta)


def rapidity_penalty(spec: ContractSpec, e: float, de: float) -> float:
    j = level_index(spec, e)
    n = spec.grid.to_steps(de)
    allowed = allowed_steps(spec, j)
    if not np.any(np.isclose(allowed, n)):
        raise ActionException(
            f"action {de} is not allowed at level {e}",
            details={"e": e, "de": de, "allowed": (allowed * spec.grid.delta).tolist()}
        )
    return step_penalty(spec, int(round(n)))


def step_is_penalised(spec: ContractSpec, n: int) -> bool:
    """Whether an allowed step lies outside the penalty-free rate band."""
    delta = spec.grid.delta
    return n < ceil_steps(spec.i_min_b, delta) or n > floor_steps(spec.i_max_b, delta)


def step_penalty(spec: ContractSpec, n: int) -> float:
    return spec.q_b_value if step_is_penalised(spec, n) else 0.0


def settlement_penalty(spec: ContractSpec, e: float) -> float:
    level_index(spec, e)
    return spec.settlement_value(e)


def immediate_charge_cost(spec: ContractSpec, s0: float) -> float:
    """Cost of buying enough at s0 to fill the storage from e_start to e_max."""
    return (spec.grid.e_max - spec.e_start) * s0 / spec.eta
