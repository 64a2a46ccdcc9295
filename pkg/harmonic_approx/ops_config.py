import hashlib
import json
import logging
from enum import Enum
from pathlib import Path

from dotenv import dotenv_values
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .catalog import get_field
from .field_domain import Domain
from .handling_error import ConfigError

logger = logging.getLogger(__name__)


class Experiment(str, Enum):
    modulus = "modulus"
    kfunc = "kfunc"
    pizzetti = "pizzetti"
    kernel = "kernel"
    approx = "approx"
    rates = "rates"


class DomainShape(str, Enum):
    ball = "ball"
    box = "box"


_LIST_FIELDS = ("center", "lo", "hi", "u_grid", "t_grid", "t_inner", "p_list", "nu_list", "moment_orders")


class ExperimentConfig(BaseModel):
    """Validated experiment settings: a flat key=value file plus command-line overrides."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    experiment: Experiment
    field_id: str = "radial_sq"
    dim: int = Field(default=2, ge=2, le=3)

    domain: DomainShape = DomainShape.ball
    center: list[float] | None = None
    radius: float = Field(default=1.0, gt=0)
    lo: list[float] | None = None
    hi: list[float] | None = None
    margin: float = Field(default=0.25, gt=0)

    u_grid: list[float] = [0.05, 0.1, 0.15, 0.2, 0.25]
    t_grid: list[float] = [0.05, 0.1, 0.15, 0.2]
    t_inner: list[float] = [0.5, 1.0]
    x_density: float = Field(default=1.0 / 32, gt=0)
    t_refine: int = Field(default=8, ge=1)
    quad_points: int = Field(default=64, ge=16)
    n_pairs: int = Field(default=50, ge=1)

    k: int = Field(default=3, ge=1)
    nu: int = Field(default=4, ge=1)
    nu_list: list[int] = [4, 8, 16, 32, 64]
    moment_orders: list[int] = [0, 1, 2]

    p: int = Field(default=8, ge=1)
    p_list: list[int] = [4, 8, 16, 32]
    r: int = Field(default=0, ge=0)
    conv_grid: float = Field(default=1.0 / 64, gt=0)
    eval_grid: float = Field(default=1.0 / 64, gt=0)
    bvp_spacing: float = Field(default=1.0 / 256, gt=0)
    tol: float = Field(default=1e-10, gt=0)

    out: str = "results"
    seed: int = 0
    dump_grid: bool = False

    @field_validator(*_LIST_FIELDS, mode="before")
    @classmethod
    def split_lists(cls, value):
        if isinstance(value, str):
            return [item.strip() for item in value.split(",") if item.strip()]
        return value

    @field_validator("p_list", "nu_list", "moment_orders")
    @classmethod
    def sort_ascending(cls, value: list[int]) -> list[int]:
        return sorted(value)

    @model_validator(mode="after")
    def check_references(self) -> "ExperimentConfig":
        get_field(self.field_id, self.dim)
        for name in ("center", "lo", "hi"):
            value = getattr(self, name)
            if value is not None and len(value) != self.dim:
                raise ConfigError(f"{name} needs {self.dim} coordinates, got {value}")
        return self

    def build_domain(self) -> Domain:
        if self.domain is DomainShape.ball:
            return Domain.ball(self.center or [0.0] * self.dim, self.radius)
        return Domain.box(self.lo or [-1.0] * self.dim, self.hi or [1.0] * self.dim)

    @property
    def config_hash(self) -> str:
        payload = json.dumps(self.model_dump(mode="json", exclude={"out"}), sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()


def _normalise(key: str) -> str:
    return key.strip().lower().replace("-", "_")


def load_config(experiment: Experiment | str, path: str | Path | None = None, overrides: dict | None = None) -> ExperimentConfig:
    """Merge a key=value config file with overrides and validate the result."""
    values: dict = {}
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file {path} does not exist")
        values.update({_normalise(k): v for k, v in dotenv_values(path).items() if v is not None})
    values.update({_normalise(k): v for k, v in (overrides or {}).items() if v is not None})
    values["experiment"] = Experiment(experiment)
    logger.debug("config keys: %s", sorted(values))
    return ExperimentConfig(**values)
