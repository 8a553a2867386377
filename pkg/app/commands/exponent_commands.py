# app/commands/exponent_commands.py
from typing import Optional

import typer

from app.commands.common import build_config, data_errors, emit, read_problem
from app.core.exponent import exponent_report
from app.schema.report_schema import ExponentResponse


def exponent(
    problem: Optional[str] = typer.Option(None, "--problem", help="Problem file (JSON)"),
    rates: Optional[str] = typer.Option(None, "--rates", help="Comma list of cumulative rates in nats"),
    distortions: Optional[str] = typer.Option(None, "--distortions", help="Comma list of distortion levels"),
    incremental_rates: bool = typer.Option(False, "--incremental-rates"),
    grid: Optional[int] = typer.Option(None, "--grid", help="Weight grid resolution"),
    multistarts: Optional[int] = typer.Option(None, "--multistarts"),
    w_caps: Optional[str] = typer.Option(None, "--w-caps", help="Comma list of W alphabet caps"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Seed for multistarts and sampling (required)"),
    oracle: bool = typer.Option(False, "--oracle", help="Certify small inner minima on a simplex lattice"),
    output_format: str = typer.Option("json", "--format", help="json or csv"),
    log_base: str = typer.Option("e", "--log-base", help="e or 2"),
):
    """Strong converse exponent F, its tilde lower bound and the positivity certificate."""
    config = build_config(
        command="exponent", problem=problem, rates=rates, distortions=distortions,
        incremental_rates=incremental_rates, grid=grid, multistarts=multistarts, w_caps=w_caps,
        seed=seed, oracle=oracle, format=output_format, log_base=log_base,
    )
    with data_errors():
        source, sha = read_problem(config)
        result = exponent_report(source, config.point(), config.solver_options())
    emit(config, sha, ExponentResponse.from_result(result).model_dump(mode="json"))
