# app/commands/problem_commands.py
from typing import Optional

import typer

from app.commands.common import build_config, data_errors, emit, read_problem
from app.schema.report_schema import ProblemSummary

problem_app = typer.Typer(help="Problem file utilities")


@problem_app.command("validate")
def validate(
    problem: Optional[str] = typer.Option(None, "--problem", help="Problem file (JSON)"),
    output_format: str = typer.Option("json", "--format"),
):
    """Load a problem file and echo its alphabets, source marginal and d_bar."""
    config = build_config(command="validate", problem=problem, format=output_format)
    with data_errors():
        source, sha = read_problem(config)
    emit(config, sha, ProblemSummary.from_problem(source).model_dump(mode="json"))
