"""
Causal successive refinement command-line entry point
"""
import logging
import sys

import click
import typer
from rich.console import Console
from rich.logging import RichHandler

from app import config
from app.commands import exponent_commands, problem_commands, region_commands, simulate_commands
from app.commands.common import ExitCode

app = typer.Typer(
    name="csr",
    help="Rate-distortion region, strong converse exponent and finite-blocklength checks "
         "for k-user successive refinement with causal side information.",
    no_args_is_help=True,
    add_completion=False,
)


# ===== LOGGING =====
def configure_logging(level: str) -> None:
    """Rich handler on stderr; stdout carries reports only."""
    root = logging.getLogger()
    if not any(isinstance(h, RichHandler) for h in root.handlers):
        root.addHandler(RichHandler(console=Console(stderr=True), show_path=False))
    root.setLevel(getattr(logging, level.upper(), logging.WARNING))


@app.callback()
def main_callback(
    log_level: str = typer.Option(config.LOG_LEVEL, "--log-level", help="DEBUG, INFO, WARNING or ERROR"),
):
    configure_logging(log_level)


# ===== COMMANDS =====
app.command(name="region")(region_commands.region)
app.command(name="boundary")(region_commands.boundary)
app.command(name="exponent")(exponent_commands.exponent)
app.command(name="simulate")(simulate_commands.simulate)
app.command(name="verify")(simulate_commands.verify)
app.add_typer(problem_commands.problem_app, name="problem")


def main() -> None:
    """Console script; click usage errors exit with 1 instead of 2."""
    try:
        code = app(standalone_mode=False)
    except click.ClickException as e:
        e.show()
        sys.exit(ExitCode.USAGE.value)
    except click.exceptions.Abort:
        sys.exit(ExitCode.USAGE.value)
    sys.exit(code if isinstance(code, int) else ExitCode.OK.value)


if __name__ == "__main__":
    main()
