# app/commands/common.py
import enum
import logging
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Iterator, Optional

import typer
from pydantic import ValidationError

from app.core.problem import load_problem, problem_hash
from app.exceptions import BudgetExceededError, ConvergenceError, InputError, NumericalDomainError
from app.models.problem import SourceProblem
from app.schema.config_schema import RunConfig
from app.utils.output import envelope, render

logger = logging.getLogger(__name__)


class ExitCode(int, enum.Enum):
    OK = 0
    USAGE = 1
    DATA = 2
    OUTSIDE = 3
    BOUNDARY = 4


def build_config(**fields: Any) -> RunConfig:
    """Validate CLI options; anything wrong here is a usage error."""
    try:
        config = RunConfig(**fields)
        if config.rates is not None and config.distortions is not None:
            config.point()
        config.solver_options()
    except (ValidationError, InputError) as e:
        logger.error(f"Invalid options: {e}")
        raise typer.Exit(code=ExitCode.USAGE.value)
    return config


@contextmanager
def data_errors() -> Iterator[None]:
    """Core errors and unreadable or unwritable files become exit code 2 with the message on stderr."""
    try:
        yield
    except (InputError, NumericalDomainError, BudgetExceededError, ConvergenceError, OSError) as e:
        logger.error(f"{type(e).__name__}: {e}")
        raise typer.Exit(code=ExitCode.DATA.value)


def read_problem(config: RunConfig) -> tuple[SourceProblem, str]:
    path = Path(config.problem)
    if not path.is_file():
        raise InputError(f"Problem file not found: {path}")
    raw = path.read_bytes()
    return load_problem(raw), problem_hash(raw)


def emit(config: RunConfig, problem_sha256: Optional[str], result: Any) -> None:
    text = render(envelope(config, problem_sha256, result), config.format)
    typer.echo(text if text.endswith("\n") else text + "\n", nl=False)
