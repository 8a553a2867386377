# app/schema/config_schema.py
import enum
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.models.problem import RateDistortionPoint
from app.schema.options_schema import SolverOptions


class OutputFormat(str, enum.Enum):
    JSON = "json"
    CSV = "csv"


class LogBase(str, enum.Enum):
    E = "e"
    TWO = "2"


# every solver command draws multistart seeds
STOCHASTIC_COMMANDS = {"region", "exponent", "boundary", "simulate", "verify"}
POINT_COMMANDS = {"region", "exponent", "simulate", "verify"}


def _split(value):
    if isinstance(value, str):
        return [part.strip() for part in value.split(",") if part.strip()]
    return value


class RunConfig(BaseModel):
    """Everything one CLI invocation needs; echoed verbatim into its report."""
    model_config = ConfigDict(frozen=True)

    command: str
    problem: str
    rates: Optional[List[float]] = None
    distortions: Optional[List[float]] = None
    incremental_rates: bool = False
    grid: Optional[int] = Field(None, ge=2, le=64)
    multistarts: Optional[int] = Field(None, ge=1, le=1024)
    w_caps: Optional[List[int]] = None
    budget: Optional[int] = Field(None, ge=1)
    samples: int = Field(0, ge=0, le=10 ** 9)
    seed: Optional[int] = Field(None, ge=0)
    n: List[int] = []
    format: OutputFormat = OutputFormat.JSON
    log_base: LogBase = LogBase.E
    code: Optional[str] = None
    export: Optional[str] = None
    dp: bool = True
    oracle: bool = False

    @field_validator("rates", "distortions", "w_caps", mode="before")
    @classmethod
    def split_lists(cls, v):
        return _split(v)

    @field_validator("n", mode="before")
    @classmethod
    def expand_blocklengths(cls, v):
        """Accepts "4", "2,3,5" or a range "2-8"."""
        if v is None:
            return []
        values = []
        for part in _split(v) if isinstance(v, str) else v:
            if isinstance(part, str) and "-" in part:
                lo, hi = (int(s) for s in part.split("-", 1))
                values.extend(range(lo, hi + 1))
            else:
                values.append(part)
        return values

    @field_validator("n")
    @classmethod
    def validate_blocklengths(cls, v: List[int]) -> List[int]:
        if any(n < 1 or n > 64 for n in v):
            raise ValueError("blocklengths must lie in [1, 64]")
        return v

    @field_validator("w_caps")
    @classmethod
    def validate_caps(cls, v: Optional[List[int]]) -> Optional[List[int]]:
        if v is not None and any(c < 1 for c in v):
            raise ValueError("W caps must be positive")
        return v

    @model_validator(mode="after")
    def validate_command(self):
        if self.command in STOCHASTIC_COMMANDS and self.seed is None:
            raise ValueError(f"--seed is required for {self.command}")
        if self.command in POINT_COMMANDS:
            if self.distortions is None:
                raise ValueError("--distortions is required")
            needs_rates = self.command != "simulate" or self.code is None
            if needs_rates and self.rates is None:
                raise ValueError("--rates is required")
            if self.rates is not None and len(self.rates) != len(self.distortions):
                raise ValueError("--rates and --distortions need the same number of entries")
        if self.command == "boundary" and not self.distortions:
            raise ValueError("--distortions is required")
        if self.command == "verify" and not self.n:
            raise ValueError("--n is required for verify")
        if self.command == "simulate" and self.code is None and len(self.n) != 1:
            raise ValueError("simulate builds one code: pass a single --n")
        return self

    def point(self) -> RateDistortionPoint:
        if self.incremental_rates:
            return RateDistortionPoint.from_stage_rates(self.rates, self.distortions)
        return RateDistortionPoint(tuple(self.rates), tuple(self.distortions))

    def solver_options(self) -> SolverOptions:
        overrides = {"seed": self.seed or 0, "omega_oracle": self.oracle}
        if self.grid is not None:
            overrides["weight_resolution"] = self.grid
        if self.multistarts is not None:
            overrides["multistarts"] = self.multistarts
        if self.w_caps is not None:
            overrides["w_caps"] = tuple(self.w_caps)
            overrides["free_w_caps"] = tuple(self.w_caps)
        if self.budget is not None:
            overrides["enumeration_budget"] = self.budget
        return SolverOptions(**overrides)
