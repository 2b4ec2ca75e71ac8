"""
Published reference values for the four bundled storage contracts.

Values are keyed by (contract, σ). The bundled YAML configurations under
`configs/` encode CONTRACT_PARAMETERS and GENERAL_PARAMETERS field for
field; layer 7 checks them against these constants.
"""

from typing import Dict, Tuple

# ─── Contract Characteristics ───────────────────────────────────────────

GENERAL_PARAMETERS = {
    "kappa": 0.3,
    "theta": 10.1,
    "x0": 10.0,
    "r": 0.01,
    "second_order_gamma": 0.5,
    "maturity_years": 1.0,
    "n_exercise": 50,
    "delta_mwh": 1.0,
    "i_min_market_mwh": -0.1,
}

SIGMAS = (0.3, 0.6, 0.9, 1.2)
CONTRACTS = (1, 2, 3, 4)

CONTRACT_PARAMETERS: Dict[int, dict] = {
    1: {
        "e_start_mwh": 7.0, "e_min_mwh": 0.0, "e_max_mwh": 15.0,
        "i_min_op_mwh": -6.0, "i_max_op_mwh": 6.0, "i_min_b_mwh": -4.0, "i_max_b_mwh": 4.0,
        "eta": 0.95, "q_b_eur": -3.0,
        "settlement": {"kind": "threshold", "threshold_mwh": 7.0, "penalty_eur": -350.0},
    },
    2: {
        "e_start_mwh": 7.0, "e_min_mwh": 0.0, "e_max_mwh": 15.0,
        "i_min_op_mwh": -6.0, "i_max_op_mwh": 6.0, "i_min_b_mwh": -4.0, "i_max_b_mwh": 4.0,
        "eta": 1.0, "q_b_eur": -3.0,
        "settlement": {"kind": "threshold", "threshold_mwh": 7.0, "penalty_eur": -350.0},
    },
    3: {
        "e_start_mwh": 6.0, "e_min_mwh": 0.0, "e_max_mwh": 12.0,
        "i_min_op_mwh": -4.0, "i_max_op_mwh": 4.0, "i_min_b_mwh": -3.0, "i_max_b_mwh": 3.0,
        "eta": 0.9, "q_b_eur": -10.0,
        "settlement": {"kind": "threshold", "threshold_mwh": 6.0, "penalty_eur": -2000.0},
    },
    4: {
        "e_start_mwh": 2.0, "e_min_mwh": 0.0, "e_max_mwh": 12.0,
        "i_min_op_mwh": -4.0, "i_max_op_mwh": 4.0, "i_min_b_mwh": -3.0, "i_max_b_mwh": 3.0,
        "eta": 0.9, "q_b_eur": -10.0,
        "settlement": {
            "kind": "piecewise_linear", "e_fix_mwh": 6.0,
            "slope_penalty_eur": 1000.0, "floor_penalty_eur": 2000.0,
        },
    },
}

# Contract 4 with selling switched off; the market minimum moves to 0 with it
NO_RELEASE_OVERRIDES = {"i_min_op_mwh": 0.0, "i_min_b_mwh": 0.0, "i_min_market_mwh": 0.0}


def config_name(contract: int, sigma: float) -> str:
    """Bundled configuration stem, e.g. (2, 0.6) → 'contract2_sigma06'."""
    return f"contract{contract}_sigma{int(round(sigma * 10)):02d}"


# ─── COS Values (L̄ = 10, δ = 1 MWh, M = 50) ─────────────────────────────
# (contract, σ) -> {N: value}

COS_VALUES: Dict[Tuple[int, float], Dict[int, float]] = {
    (1, 0.3): {100: 0.0174, 150: -0.0003, 200: 0.0000},
    (1, 0.6): {100: -0.0002, 150: 0.0000, 200: 0.0000},
    (1, 0.9): {100: 0.0087, 150: 0.0091, 200: 0.0091},
    (1, 1.2): {100: 0.1388, 150: 0.1434, 200: 0.1433},
    (2, 0.3): {100: 1.9301, 150: 1.8624, 200: 1.8630},
    (2, 0.6): {100: 3.4770, 150: 3.4640, 200: 3.4641},
    (2, 0.9): {100: 5.2304, 150: 5.2291, 200: 5.2291},
    (2, 1.2): {100: 7.1323, 150: 7.1465, 200: 7.1464},
    (3, 0.3): {100: 0.0114, 150: -0.0002, 200: 0.0000},
    (3, 0.6): {100: 0.0000, 150: 0.0000, 200: 0.0000},
    (3, 0.9): {100: -0.0001, 150: 0.0000, 200: 0.0000},
    (3, 1.2): {100: 0.0000, 150: 0.0004, 200: 0.0004},
    (4, 0.3): {100: -331.3426, 150: -331.3153, 200: -331.3160},
    (4, 0.6): {100: -330.7729, 150: -330.7741, 200: -330.7742},
    (4, 0.9): {100: -329.3769, 150: -330.3782, 200: -330.3782},
    (4, 1.2): {100: -330.1309, 150: -330.1443, 200: -330.1442},
}

# ─── LSMC 95% Intervals (10 runs × 25 000 paths) ────────────────────────

LSMC_INTERVALS: Dict[Tuple[int, float], Tuple[float, float]] = {
    (1, 0.3): (0.0000, 0.0000),
    (1, 0.6): (-0.0005, 0.0014),
    (1, 0.9): (-0.0051, 0.0222),
    (1, 1.2): (0.1399, 0.1943),
    (2, 0.3): (1.8550, 1.9254),
    (2, 0.6): (3.4642, 3.6050),
    (2, 0.9): (5.2075, 5.4154),
    (2, 1.2): (7.1293, 7.3802),
    (3, 0.3): (0.0000, 0.0000),
    (3, 0.6): (-0.0001, 0.0000),
    (3, 0.9): (-0.0008, 0.0012),
    (3, 1.2): (-0.0044, 0.0020),
    (4, 0.3): (-331.3365, -331.2007),
    (4, 0.6): (-330.7876, -330.5472),
    (4, 0.9): (-330.3961, -330.0825),
    (4, 1.2): (-330.1435, -329.7515),
}

# ─── Greeks at t0 (S0, e_start), N = 200 ────────────────────────────────
# (contract, σ) -> (Δ, Γ, ν)

GREEKS: Dict[Tuple[int, float], Tuple[float, float, float]] = {
    (1, 0.6): (0.0000, 0.0001, 0.0000),
    (2, 0.6): (0.1663, 0.8336, 0.3054),
    (3, 0.6): (0.0000, 0.0000, 0.0000),
    (4, 0.6): (-9.1176, 0.4957, 0.1260),
    (1, 1.2): (-0.0443, 0.0516, 0.0372),
    (2, 1.2): (-0.2294, 0.4055, 0.2934),
    (3, 1.2): (-0.0003, 0.0003, 0.0002),
    (4, 1.2): (-9.3865, 0.3245, 0.1237),
}

# Cost of charging contract 4 from e_start to e_max at t1 for S0 = 30
CONTRACT4_IMMEDIATE_CHARGE_COST = 333.33

# ─── Tolerances ─────────────────────────────────────────────────────────

VALUE_ABS_TOLERANCE = 0.02
VALUE_REL_TOLERANCE = 1e-3
ZERO_VALUE_BOUND = 0.005          # contract 3, all σ
GREEKS_TOLERANCE = 0.01
LSMC_CI_WIDENING = 0.01


def value_tolerance(expected: float) -> float:
    return max(VALUE_ABS_TOLERANCE, VALUE_REL_TOLERANCE * abs(expected))


def value_matches(contract: int, computed: float, expected: float) -> bool:
    if contract == 3:
        return abs(computed) <= ZERO_VALUE_BOUND
    return abs(computed - expected) <= value_tolerance(expected)
