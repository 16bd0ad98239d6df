"""
Run configuration.

Sources, lowest to highest precedence: field defaults, a flat key=value file
(parsed with python-dotenv, `#` comments allowed), command-line flags. The
process environment is never consulted.
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Any, Dict, List, Literal, Mapping, Optional, Union

from dotenv import dotenv_values
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .models import Architecture, CropPolicy, PredictorKind
from .net.architecture import NetConfig

logger = logging.getLogger(__name__)


class ConfigError(ValueError):
    """Invalid or incomplete run configuration."""


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    dataset: Path = Path("data")
    out_dir: Path = Path("runs")
    checkpoint: Optional[Path] = None
    seed: int
    architecture: Architecture = Architecture.COARSE_FINE
    tiny: bool = False
    crop_policy: Optional[CropPolicy] = None
    refine_size: Optional[int] = Field(default=None, gt=0)
    steps: int = Field(default=500, ge=0)
    batch_size: int = Field(default=4, ge=1)
    log_every: int = Field(default=10, ge=1)
    learning_rate: float = Field(default=1e-3, gt=0.0)
    validation_clips: int = Field(default=32, ge=1)
    predictor: Optional[PredictorKind] = None
    split: Literal["train", "validation", "test"] = "test"
    resampling: Literal["gt", "prediction", "none"] = "gt"
    sigma_fraction: float = Field(default=0.25, gt=0.0)
    n_thresholds: int = Field(default=10, ge=2)
    window: int = Field(default=16, ge=1)
    prediction_stride: int = Field(default=8, ge=1)
    test_sequences: Optional[List[str]] = None
    sequences_per_landscape: int = Field(default=2, ge=1)
    frames: int = Field(default=320, ge=16)
    height: int = Field(default=45, ge=16)
    width: int = Field(default=80, ge=16)

    @field_validator("test_sequences", mode="before")
    @classmethod
    def _split_list(cls, v: Any) -> Any:
        if isinstance(v, str):
            return [s.strip() for s in v.split(",") if s.strip()]
        return v

    @model_validator(mode="after")
    def _check_net(self) -> "RunConfig":
        self.net_config()
        return self

    @property
    def policy(self) -> CropPolicy:
        if self.crop_policy is not None:
            return self.crop_policy
        return CropPolicy.MILD if self.architecture == Architecture.COARSE else CropPolicy.AGGRESSIVE

    def net_config(self) -> NetConfig:
        if self.tiny:
            return NetConfig.tiny_config(self.architecture, self.refine_size or 128)
        return NetConfig.full(self.architecture, self.refine_size or 448)


def _normalize_key(key: str) -> str:
    return key.strip().lower().replace("-", "_")


def read_config_file(path: Union[str, Path]) -> Dict[str, str]:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    values = dotenv_values(path)
    return {_normalize_key(k): v for k, v in values.items() if v is not None and v != ""}


def load_config(path: Optional[Union[str, Path]] = None, overrides: Optional[Mapping[str, Any]] = None) -> RunConfig:
    """Merge file values and flag overrides (None means "not given") into a RunConfig."""
    merged: Dict[str, Any] = read_config_file(path) if path else {}
    for key, value in (overrides or {}).items():
        if value is not None:
            merged[_normalize_key(key)] = value
    if "seed" not in merged:
        raise ConfigError("a seed is required (--seed or seed= in the config file)")
    try:
        config = RunConfig.model_validate(merged)
    except ValidationError as e:
        raise ConfigError(f"invalid configuration: {e}") from e
    logger.debug(f"Configuration: {config.model_dump(mode='json')}")
    return config
