"""
╔══════════════════════════════════════════════════════════════════════════╗
║                    Run Configuration (YAML) — Schema                    ║
╠══════════════════════════════════════════════════════════════════════════╣
║                                                                        ║
║  One YAML file per experiment with the sections                        ║
║                                                                        ║
║    model     price map + OU factor + rate                              ║
║    contract  contract characteristics, units in the key names          ║
║    cos       COS pricer settings                                       ║
║    lsmc      Monte Carlo settings                                      ║
║    output    directory, formats, label                                 ║
║                                                                        ║
║  Unknown keys are rejected. Every error is reported with its dotted    ║
║  field path and mapped to ConfigException (exit code 2).               ║
║                                                                        ║
╚══════════════════════════════════════════════════════════════════════════╝
"""

import copy
import logging
from pathlib import Path
from typing import List, Literal, Optional, Tuple, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator
from typing_extensions import Annotated

from src.app.exceptions.custom_exceptions import ConfigException
from src.app.models.contract_model import ContractSpec, EnergyGrid, PiecewiseLinear, ThresholdConstant, TimeGrid
from src.app.models.price_model import MarketParams, OUParams, PriceModel, QuadraticFactor
from src.app.models.valuation_model import CosConfig, LsmcConfig
from src.app.services.price_model.polynomial_map import build_map, quadratic_from_polar, second_order_factors

logger = logging.getLogger(__name__)


def validation_messages(error: ValidationError) -> List[dict]:
    return [
        {"field": ".".join(str(loc) for loc in item.get("loc", ())), "message": item.get("msg", "")}
        for item in error.errors()
    ]


# ─── Sections ───────────────────────────────────────────────────────────


class ModelSection(BaseModel):
    """
    Price model. Give at most one of `second_order_gamma`, `factors` [[α, γ], …]
    or `polar_factors` [[ξ, r̂], …]; none means the identity map S = X.
    """
    model_config = ConfigDict(extra="forbid")

    second_order_gamma: Optional[float] = None
    factors: Optional[List[Tuple[float, float]]] = None
    polar_factors: Optional[List[Tuple[float, float]]] = None
    kappa: float = Field(..., gt=0)
    theta: float
    sigma: float = Field(..., gt=0)
    x0: float
    r: float = Field(0.0, ge=0)

    @model_validator(mode="after")
    def _one_map(self) -> "ModelSection":
        given = [name for name in ("second_order_gamma", "factors", "polar_factors") if getattr(self, name) is not None]
        if len(given) > 1:
            raise ValueError(f"give only one of {given}")
        return self


class ThresholdSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["threshold"] = "threshold"
    threshold_mwh: float
    penalty_eur: float = Field(0.0, le=0)


class PiecewiseLinearSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["piecewise_linear"]
    e_fix_mwh: float
    slope_penalty_eur: float = Field(..., ge=0)
    floor_penalty_eur: float = Field(..., ge=0)


class ContractSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str = "contract"
    t0_years: float = 0.0
    maturity_years: float
    n_exercise: int = Field(..., ge=1)
    e_min_mwh: float = 0.0
    e_max_mwh: float
    delta_mwh: float = Field(1.0, gt=0)
    e_start_mwh: float
    i_min_op_mwh: float
    i_max_op_mwh: float
    i_min_market_mwh: float = -0.1
    i_min_b_mwh: float
    i_max_b_mwh: float
    eta: float = 1.0
    q_b_eur: float = 0.0
    settlement: Annotated[Union[ThresholdSection, PiecewiseLinearSection], Field(discriminator="kind")] = \
        ThresholdSection(threshold_mwh=0.0)


class OutputSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    directory: Optional[str] = None
    formats: List[Literal["csv", "json"]] = ["csv", "json"]
    label: Optional[str] = None


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    model: ModelSection
    contract: ContractSection
    cos: CosConfig = CosConfig()
    lsmc: LsmcConfig = LsmcConfig()
    output: OutputSection = OutputSection()

    @property
    def label(self) -> str:
        return self.output.label or self.contract.name

    # ── Domain objects ───────────────────────────────────────────

    def to_price_model(self) -> PriceModel:
        section = self.model
        try:
            if section.second_order_gamma is not None:
                factors = second_order_factors(section.second_order_gamma)
            elif section.polar_factors is not None:
                factors = [quadratic_from_polar(xi, r_hat) for xi, r_hat in section.polar_factors]
            else:
                factors = [QuadraticFactor(alpha=a, gamma=g) for a, g in (section.factors or [])]
        except ValidationError as e:
            raise ConfigException("invalid price-map factors", details=validation_messages(e))
        return PriceModel(
            price_map=build_map(factors),
            ou=OUParams(kappa=section.kappa, theta=section.theta, sigma=section.sigma, x0=section.x0),
            market=MarketParams(r=section.r),
        )

    def to_contract_spec(self) -> ContractSpec:
        c = self.contract
        if isinstance(c.settlement, PiecewiseLinearSection):
            settlement = PiecewiseLinear(
                e_fix=c.settlement.e_fix_mwh,
                slope_penalty=c.settlement.slope_penalty_eur,
                floor_penalty=c.settlement.floor_penalty_eur,
            )
        else:
            settlement = ThresholdConstant(threshold=c.settlement.threshold_mwh, penalty=c.settlement.penalty_eur)
        try:
            return ContractSpec(
                name=c.name,
                time=TimeGrid(t0=c.t0_years, maturity=c.maturity_years, n_exercise=c.n_exercise),
                grid=EnergyGrid(e_min=c.e_min_mwh, e_max=c.e_max_mwh, delta=c.delta_mwh),
                e_start=c.e_start_mwh,
                i_min_op=c.i_min_op_mwh, i_max_op=c.i_max_op_mwh,
                i_min_market=c.i_min_market_mwh,
                i_min_b=c.i_min_b_mwh, i_max_b=c.i_max_b_mwh,
                eta=c.eta, q_b_value=c.q_b_eur,
                settlement=settlement,
            )
        except ValidationError as e:
            raise ConfigException("invalid contract section", details=validation_messages(e))

    def to_cos_config(self, n_jobs: Optional[int] = None) -> CosConfig:
        return self.cos if n_jobs is None else self.cos.model_copy(update={"n_jobs": n_jobs})

    def to_lsmc_config(self, seed: Optional[int] = None, n_jobs: Optional[int] = None) -> LsmcConfig:
        update = {}
        if seed is not None:
            update["seed"] = seed
        if n_jobs is not None:
            update["n_jobs"] = n_jobs
        return self.lsmc.model_copy(update=update) if update else self.lsmc

    # ── Overrides ────────────────────────────────────────────────

    def with_overrides(self, **dotted) -> "RunConfig":
        """
        Copy with dotted-path overrides, re-validated.

        Example:
            config.with_overrides(**{"model.sigma": 1.2, "cos.n_terms": 100})
        """
        data = copy.deepcopy(self.model_dump())
        for path, value in dotted.items():
            keys = path.split(".")
            node = data
            for key in keys[:-1]:
                if not isinstance(node.get(key), dict):
                    raise ConfigException(f"unknown configuration section '{path}'")
                node = node[key]
            node[keys[-1]] = value
        try:
            return RunConfig.model_validate(data)
        except ValidationError as e:
            raise ConfigException(f"invalid override {dotted}", details=validation_messages(e))


# ─── Loading ────────────────────────────────────────────────────────────


def load_run_config(path: Union[str, Path]) -> RunConfig:
    """
    Load and validate a YAML run configuration.

    Raises:
        ConfigException: missing file, YAML syntax error or schema violation.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigException(f"configuration file not found: {path}")
    try:
        with path.open("r", encoding="utf-8") as handle:
            data = yaml.safe_load(handle)
    except yaml.YAMLError as e:
        raise ConfigException(f"YAML syntax error in {path}", details=str(e))
    if not isinstance(data, dict):
        raise ConfigException(f"{path} must contain a mapping of sections")

    data.setdefault("output", {})
    if isinstance(data["output"], dict):
        data["output"].setdefault("label", path.stem)
    try:
        config = RunConfig.model_validate(data)
    except ValidationError as e:
        messages = validation_messages(e)
        raise ConfigException(
            f"invalid configuration {path}: " + "; ".join(f"{m['field']}: {m['message']}" for m in messages),
            details=messages,
        )
    logger.debug(f"📄 Loaded run configuration {path} (label={config.label})")
    return config
