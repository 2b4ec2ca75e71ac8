"""
Contract Specification Validator.

Checks every contract invariant and reports all violations at once, with
the offending field name, instead of stopping at the first one.
"""
import logging
from typing import List, Tuple

from src.app.exceptions.custom_exceptions import SpecValidationException
from src.app.models.contract_model import GRID_TOLERANCE, ContractSpec, PiecewiseLinear

logger = logging.getLogger(__name__)

RATE_FIELDS = ("i_min_op", "i_max_op", "i_min_b", "i_max_b")


def _is_multiple(amount: float, delta: float) -> bool:
    ratio = amount / delta
    return abs(ratio - round(ratio)) <= GRID_TOLERANCE * max(1.0, abs(ratio))


def collect_spec_issues(spec: ContractSpec) -> Tuple[List[dict], List[str]]:
    """
    Returns (errors, warnings). Each error is {"field": ..., "message": ...}.
    """
    errors: List[dict] = []
    warnings: List[str] = []
    grid = spec.grid

    def fail(field: str, message: str) -> None:
        errors.append({"field": field, "message": message})

    # Rate ordering: i_min_op ≤ i_min_b ≤ i_min_market ≤ 0 ≤ i_max_b ≤ i_max_op
    chain = [
        ("i_min_op", spec.i_min_op), ("i_min_b", spec.i_min_b),
        ("i_min_market", spec.i_min_market), ("zero", 0.0),
        ("i_max_b", spec.i_max_b), ("i_max_op", spec.i_max_op),
    ]
    for (left_name, left), (right_name, right) in zip(chain, chain[1:]):
        if left > right:
            field = right_name if left_name == "zero" else left_name
            fail(field, f"{left_name}={left} must be ≤ {right_name}={right}")

    if not grid.e_min <= spec.e_start <= grid.e_max:
        fail("e_start", f"{spec.e_start} outside [{grid.e_min}, {grid.e_max}]")
    elif spec.start_index < 0:
        fail("e_start", f"{spec.e_start} is not a grid level (delta={grid.delta})")

    if not 0.0 < spec.eta <= 1.0:
        fail("eta", f"efficiency {spec.eta} must lie in (0, 1]")

    if spec.q_b_value > 0.0:
        fail("q_b_value", f"rapidity penalty {spec.q_b_value} must be ≤ 0")

    for name in RATE_FIELDS:
        value = getattr(spec, name)
        if not _is_multiple(value, grid.delta):
            fail(name, f"{value} is not a multiple of delta={grid.delta}")

    if isinstance(spec.settlement, PiecewiseLinear) and not grid.e_min <= spec.settlement.e_fix <= grid.e_max:
        fail("settlement.e_fix", f"{spec.settlement.e_fix} outside [{grid.e_min}, {grid.e_max}]")

    if spec.i_min_market < 0.0 and abs(spec.i_min_market) < grid.delta:
        warnings.append(
            f"i_min_market={spec.i_min_market} is inactive at delta={grid.delta}: "
            f"every release step already sells at least {grid.delta}"
        )

    return errors, warnings


def validate_spec(spec: ContractSpec) -> List[str]:
    """
    Validates a contract specification.

    Returns:
        The list of warnings when the specification is valid.

    Raises:
        SpecValidationException: carrying every violated invariant.
    """
    errors, warnings = collect_spec_issues(spec)
    if errors:
        logger.warning(f"❌ Contract '{spec.name}' failed validation: {errors}")
        raise SpecValidationException(errors)
    for warning in warnings:
        logger.warning(f"⚠️ {warning}")
    return warnings
