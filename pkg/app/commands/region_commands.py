# app/commands/region_commands.py
from typing import Optional

import typer

from app.commands.common import ExitCode, build_config, data_errors, emit, read_problem
from app.core.region import HyperplaneTable, ba_reference, boundary_rate, membership
from app.models.distribution import Pmf
from app.models.results import Verdict
from app.schema.report_schema import BoundaryRow, MembershipResponse

VERDICT_EXIT = {
    Verdict.INSIDE: ExitCode.OK,
    Verdict.OUTSIDE: ExitCode.OUTSIDE,
    Verdict.BOUNDARY: ExitCode.BOUNDARY,
}


def region(
    problem: Optional[str] = typer.Option(None, "--problem", help="Problem file (JSON)"),
    rates: Optional[str] = typer.Option(None, "--rates", help="Comma list of cumulative rates in nats"),
    distortions: Optional[str] = typer.Option(None, "--distortions", help="Comma list of distortion levels"),
    incremental_rates: bool = typer.Option(False, "--incremental-rates", help="Read --rates as per-stage rates"),
    grid: Optional[int] = typer.Option(None, "--grid", help="Weight grid resolution"),
    multistarts: Optional[int] = typer.Option(None, "--multistarts"),
    w_caps: Optional[str] = typer.Option(None, "--w-caps", help="Comma list of W alphabet caps"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Seed for the multistart draws (required)"),
    output_format: str = typer.Option("json", "--format", help="json or csv"),
    log_base: str = typer.Option("e", "--log-base", help="e or 2"),
):
    """Is the point inside the rate-distortion region? Exit 0 inside, 3 outside, 4 boundary."""
    config = build_config(
        command="region", problem=problem, rates=rates, distortions=distortions,
        incremental_rates=incremental_rates, grid=grid, multistarts=multistarts, w_caps=w_caps,
        seed=seed, format=output_format, log_base=log_base,
    )
    with data_errors():
        source, sha = read_problem(config)
        report = membership(source, config.point(), config.solver_options())
    emit(config, sha, MembershipResponse.from_report(report).model_dump(mode="json"))
    code = VERDICT_EXIT[report.verdict]
    if code != ExitCode.OK:
        raise typer.Exit(code=code.value)


def boundary(
    problem: Optional[str] = typer.Option(None, "--problem", help="Single-user problem file (JSON)"),
    distortions: Optional[str] = typer.Option(None, "--distortions", help="Comma list of distortion levels to sweep"),
    grid: Optional[int] = typer.Option(None, "--grid"),
    multistarts: Optional[int] = typer.Option(None, "--multistarts"),
    w_caps: Optional[str] = typer.Option(None, "--w-caps"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Seed for the multistart draws (required)"),
    output_format: str = typer.Option("json", "--format"),
    log_base: str = typer.Option("e", "--log-base"),
):
    """Minimal rate per distortion level for k=1, next to the side-information-free reference."""
    config = build_config(
        command="boundary", problem=problem, distortions=distortions, grid=grid,
        multistarts=multistarts, w_caps=w_caps, seed=seed, format=output_format, log_base=log_base,
    )
    with data_errors():
        source, sha = read_problem(config)
        options = config.solver_options()
        table = HyperplaneTable(source, options)
        rows = []
        for level in config.distortions:
            rate = boundary_rate(source, (level,), options, table)
            reference = ba_reference(Pmf(source.p_x), source.distortion[0], level)
            rows.append(BoundaryRow(distortion=level, rate_nats=rate, reference_rate_nats=reference).model_dump())
    emit(config, sha, {"rows": rows})
