# app/commands/simulate_commands.py
import logging
from pathlib import Path
from typing import Optional

import typer

from app.commands.common import build_config, data_errors, emit, read_problem
from app.core.exponent import exponent_report, shared_caps
from app.core.region import HyperplaneTable, membership
from app.core.simulator import (
    distortion_criteria_check,
    evaluate_code,
    export_code,
    import_code,
    message_sizes,
    random_code,
    verify_sweep,
    with_dp_decoders,
)
from app.exceptions import InputError
from app.models.problem import AuxiliarySystem, RateDistortionPoint, SourceProblem
from app.schema.options_schema import SolverOptions
from app.schema.report_schema import EvaluationResponse

logger = logging.getLogger(__name__)


def _region_aux(problem: SourceProblem, point: RateDistortionPoint, options: SolverOptions,
                table: HyperplaneTable) -> AuxiliarySystem:
    """Auxiliary system attaining the tightest supporting hyperplane at the point."""
    report = membership(problem, point, options, table)
    if report.witness is None:
        raise InputError("No supporting hyperplane was evaluated")
    logger.info(f"Code built from weights alpha={report.witness_alpha}, beta={report.witness_beta}")
    return report.witness.argmin


def simulate(
    problem: Optional[str] = typer.Option(None, "--problem", help="Problem file (JSON)"),
    rates: Optional[str] = typer.Option(None, "--rates", help="Comma list of cumulative rates in nats"),
    distortions: Optional[str] = typer.Option(None, "--distortions", help="Comma list of distortion levels"),
    incremental_rates: bool = typer.Option(False, "--incremental-rates"),
    n: Optional[str] = typer.Option(None, "--n", help="Blocklength"),
    grid: Optional[int] = typer.Option(None, "--grid"),
    multistarts: Optional[int] = typer.Option(None, "--multistarts"),
    w_caps: Optional[str] = typer.Option(None, "--w-caps"),
    budget: Optional[int] = typer.Option(None, "--budget", help="Exact enumeration budget"),
    samples: int = typer.Option(0, "--samples", help="Monte Carlo samples; 0 means exact when within budget"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Seed for multistarts and sampling (required)"),
    code: Optional[str] = typer.Option(None, "--code", help="Evaluate an exported code instead of drawing one"),
    export: Optional[str] = typer.Option(None, "--export", help="Write the evaluated code to this file"),
    dp: bool = typer.Option(True, "--dp/--no-dp", help="Upgrade decoders to the causal DP policy"),
    output_format: str = typer.Option("json", "--format"),
    log_base: str = typer.Option("e", "--log-base"),
):
    """Build (or load) a code and evaluate its non-excess-distortion probability."""
    config = build_config(
        command="simulate", problem=problem, rates=rates, distortions=distortions,
        incremental_rates=incremental_rates, n=n, grid=grid, multistarts=multistarts, w_caps=w_caps,
        budget=budget, samples=samples, seed=seed, code=code, export=export, dp=dp,
        format=output_format, log_base=log_base,
    )
    with data_errors():
        source, sha = read_problem(config)
        options = config.solver_options()
        levels = tuple(config.distortions)
        if config.code is not None:
            built = import_code(Path(config.code).read_text())
            if built.k != source.k:
                raise InputError(f"Code has {built.k} users, problem has {source.k}")
        else:
            point = config.point()
            length = config.n[0]
            table = HyperplaneTable(source, options, shared_caps(source, options)[0])
            aux = _region_aux(source, point, options, table)
            built = random_code(source, aux, length, message_sizes(point, length), config.seed, point, options)
            if config.dp:
                built = with_dp_decoders(source, built, levels, options)
        report = evaluate_code(source, built, levels, config.seed, config.samples, options)
        criteria = distortion_criteria_check(source, built, levels, report) if report.exact else None
        if config.export is not None:
            Path(config.export).write_text(export_code(built, sha))
    emit(config, sha, EvaluationResponse.from_report(report, criteria).model_dump(mode="json"))


def verify(
    problem: Optional[str] = typer.Option(None, "--problem", help="Problem file (JSON)"),
    rates: Optional[str] = typer.Option(None, "--rates", help="Comma list of cumulative rates in nats"),
    distortions: Optional[str] = typer.Option(None, "--distortions", help="Comma list of distortion levels"),
    incremental_rates: bool = typer.Option(False, "--incremental-rates"),
    n: Optional[str] = typer.Option(None, "--n", help="Blocklengths, e.g. 2-8 or 2,4,6"),
    grid: Optional[int] = typer.Option(None, "--grid"),
    multistarts: Optional[int] = typer.Option(None, "--multistarts"),
    w_caps: Optional[str] = typer.Option(None, "--w-caps"),
    budget: Optional[int] = typer.Option(None, "--budget"),
    samples: int = typer.Option(0, "--samples"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Seed for multistarts and sampling (required)"),
    oracle: bool = typer.Option(False, "--oracle", help="Certify small inner minima on a simplex lattice"),
    dp: bool = typer.Option(True, "--dp/--no-dp"),
    output_format: str = typer.Option("json", "--format"),
    log_base: str = typer.Option("e", "--log-base"),
):
    """P_c of random codes over a blocklength sweep against (2k+3) exp(-n F)."""
    config = build_config(
        command="verify", problem=problem, rates=rates, distortions=distortions,
        incremental_rates=incremental_rates, n=n, grid=grid, multistarts=multistarts, w_caps=w_caps,
        budget=budget, samples=samples, seed=seed, oracle=oracle, dp=dp, format=output_format, log_base=log_base,
    )
    with data_errors():
        source, sha = read_problem(config)
        options = config.solver_options()
        point = config.point()
        table = HyperplaneTable(source, options, shared_caps(source, options)[0])
        aux = _region_aux(source, point, options, table)
        result = exponent_report(source, point, options, table)
        rows = verify_sweep(source, point, result, aux, config.n, config.seed, options, config.samples, config.dp)
    if not all(row.bound_satisfied for row in rows):
        logger.warning("The converse bound failed at some blocklength")
    emit(config, sha, {
        "F_nats": result.F,
        "verdict": result.diagnostics.get("verdict"),
        "margin_nats": result.diagnostics.get("margin"),
        "all_satisfied": all(row.bound_satisfied for row in rows),
        "rows": [EvaluationResponse.from_report(row).model_dump(mode="json") for row in rows],
    })
