# app/schema/options_schema.py
from typing import Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app import config
from app.models.problem import CapScheme


class SolverOptions(BaseModel):
    """Knobs shared by the region, exponent and simulator solvers."""
    model_config = ConfigDict(frozen=True)

    seed: int = Field(0, ge=0)
    multistarts: int = Field(config.MULTISTARTS, ge=1, le=1024)
    max_iter: int = Field(500, ge=1, le=100000)
    n_jobs: int = Field(config.N_JOBS)

    # ===== CARDINALITY =====
    cap_scheme: CapScheme = CapScheme.P_STAR
    w_caps: Optional[Tuple[int, ...]] = None
    # |W_j| <= |X|^j; q_default gives the full product-alphabet caps
    free_cap_scheme: CapScheme = CapScheme.P_SH
    free_w_caps: Optional[Tuple[int, ...]] = None

    # ===== REGION =====
    weight_resolution: int = Field(8, ge=2, le=64)
    refinements: int = Field(2, ge=0, le=10)
    boundary_band: float = Field(1e-3, ge=0.0)
    decoder_budget: int = Field(config.DECODER_BUDGET, ge=1)
    grid_budget: int = Field(config.GRID_BUDGET, ge=0)
    oracle_max_cells: int = Field(config.ORACLE_MAX_CELLS, ge=0)
    grid_polish: int = Field(3, ge=0, le=100)
    # lattice oracle for the inner Omega minimum, off unless asked for
    omega_oracle: bool = False

    # ===== EXPONENT =====
    theta_points: int = Field(40, ge=1, le=1000)
    theta_min: float = Field(1e-3, gt=0)
    theta_max: float = Field(20.0, gt=0)
    mu_points: int = Field(30, ge=1, le=1000)
    mu_min: float = Field(1e-2, gt=0)
    mu_max: float = Field(50.0, gt=0)
    lambda_points: int = Field(20, ge=1, le=1000)
    lambda_min: float = Field(1e-3, gt=0)
    lambda_max: float = Field(1.0, gt=0)
    sweep_multistarts: int = Field(2, ge=0, le=1024)

    # ===== SIMULATOR =====
    enumeration_budget: int = Field(config.ENUMERATION_BUDGET, ge=1)
    dp_budget: int = Field(config.DP_BUDGET, ge=1)
    mc_chunk: int = Field(100000, ge=1)
    confidence: float = Field(0.95, gt=0, lt=1)

    @field_validator("w_caps", "free_w_caps")
    @classmethod
    def validate_caps(cls, v: Optional[Tuple[int, ...]]) -> Optional[Tuple[int, ...]]:
        if v is not None and any(c < 1 for c in v):
            raise ValueError("W caps must be positive")
        return v

    @model_validator(mode="after")
    def validate_ranges(self):
        if self.theta_min > self.theta_max:
            raise ValueError("theta_min must not exceed theta_max")
        if self.mu_min > self.mu_max:
            raise ValueError("mu_min must not exceed mu_max")
        if self.lambda_min > self.lambda_max:
            raise ValueError("lambda_min must not exceed lambda_max")
        return self
