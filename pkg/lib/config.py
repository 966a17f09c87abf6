import os
import logging
from functools import lru_cache
from typing import Literal, Optional

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field


ENV_PREFIX = "POLYAPPROX_"


class Settings(BaseModel):
    """Numerical knobs shared by every module.

    Values come from the process environment (optionally a `.env` file) using
    the `POLYAPPROX_` prefix, e.g. `POLYAPPROX_NET_CONSTANT=0.4`.
    """
    model_config = ConfigDict(frozen=True)

    tolerance: float = Field(default=1e-9, gt=0, description="Relative comparison tolerance")
    net_constant: float = Field(default=0.5, gt=0, description="Direction net constant c_net")
    dudley_constant: float = Field(default=0.5, gt=0, description="Sphere net constant c_dud")
    calibration: float = Field(default=8.0, ge=1, description="Index calibration c_cal (eps' = eps / c_cal)")
    verdict_theta: float = Field(default=4.0, gt=0, description="Membership verdict threshold divisor")
    slope_bound: float = Field(default=10.0, gt=0, description="Default slope bound of noisy objectives")
    sandwich_slack: float = Field(default=1.005, ge=1, description="Safety factor on sampled sandwich certificates")
    use_buckets: bool = Field(default=False, description="Answer index queries through direction buckets")
    boundary_method: Literal["descent", "ball_search"] = "descent"
    descent_iterations: int = Field(default=400, gt=0)
    hull_prefilter: bool = Field(default=True, description="Reduce inputs to hull vertices before kernel builds")
    log_level: str = "WARNING"


def _read_env() -> dict:
    values = {}
    for name in Settings.model_fields:
        raw = os.getenv(f"{ENV_PREFIX}{name.upper()}")
        if raw is not None:
            values[name] = raw
    return values


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    load_dotenv()
    return Settings.model_validate(_read_env())


def resolve(settings: Optional[Settings]) -> Settings:
    return settings if settings is not None else get_settings()


def configure_logging(settings: Optional[Settings] = None, level: Optional[str] = None):
    settings = resolve(settings)
    logging.basicConfig(
        level=(level or settings.log_level).upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
