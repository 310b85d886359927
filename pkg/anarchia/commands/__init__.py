"""
Command modules. Each one exports a single click command that app.py registers on the
top-level group; errors are mapped onto the process exit codes here.
"""

import json
import logging
from typing import Optional

import click

from anarchia.constants import EXIT_CAP, EXIT_NO_EQUILIBRIUM, EXIT_PARSE
from anarchia.errors import CapExceeded, NoEquilibrium

logger = logging.getLogger(__name__)


def exit_code_for(error: Exception) -> int:
    if isinstance(error, CapExceeded):
        return EXIT_CAP
    if isinstance(error, NoEquilibrium):
        return EXIT_NO_EQUILIBRIUM
    return EXIT_PARSE


def fail(error: Exception, code: Optional[int] = None):
    """Log the error, echo it on stderr and leave with the matching exit code"""
    code = exit_code_for(error) if code is None else code
    logger.error(f"{type(error).__name__}: {error}")
    click.echo(f"Error: {error}", err=True)
    raise click.exceptions.Exit(code)


def emit_json(data) -> None:
    click.echo(json.dumps(data, indent=2))
