# tests/helpers.py
import numpy as np

from app.schema.options_schema import SolverOptions


def h(p: float) -> float:
    """Binary entropy in nats."""
    if p in (0.0, 1.0):
        return 0.0
    return float(-p * np.log(p) - (1 - p) * np.log(1 - p))


def fast_options(k: int = 1, **overrides) -> SolverOptions:
    """Small caps and grids, no grid oracles."""
    settings = dict(
        multistarts=6,
        max_iter=60,
        w_caps=(2,) * k,
        free_w_caps=(2,) * k,
        weight_resolution=4,
        refinements=1,
        oracle_max_cells=0,
        theta_points=3,
        theta_min=1e-2,
        theta_max=1.0,
        mu_points=3,
        mu_min=0.5,
        mu_max=5.0,
        lambda_points=3,
        lambda_min=1e-2,
        lambda_max=1.0,
        sweep_multistarts=0,
    )
    settings.update(overrides)
    return SolverOptions(**settings)
