import logging
import os
import sys

import click
from dotenv import load_dotenv

from anarchia import __version__

# Load environment variables
load_dotenv()

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

logger = logging.getLogger(__name__)


def configure_logging(level_name: str) -> None:
    level = getattr(logging, str(level_name).upper(), None)
    # stderr only; stdout carries the JSON and CSV output
    logging.basicConfig(
        level=level if isinstance(level, int) else logging.INFO,
        format=LOG_FORMAT,
        stream=sys.stderr,
        force=True,
    )
    if not isinstance(level, int):
        logger.warning(f"Unknown log level {level_name!r}, using INFO")


@click.group(name="anarchia")
@click.version_option(__version__, prog_name="anarchia")
@click.option(
    "--log-level",
    default=lambda: os.getenv("ANARCHIA_LOG_LEVEL", "INFO"),
    show_default="ANARCHIA_LOG_LEVEL or INFO",
    help="Logging level name (DEBUG, INFO, WARNING, ERROR).",
)
def cli(log_level):
    """Price of anarchy bounds and lower-bound games for weighted congestion games."""
    configure_logging(log_level)


# Register commands
try:
    from anarchia.commands.analyze import analyze
    cli.add_command(analyze)
except ImportError as e:
    logger.error(f"Failed to import analyze command: {e}")

try:
    from anarchia.commands.brute import brute
    cli.add_command(brute)
except ImportError as e:
    logger.error(f"Failed to import brute command: {e}")

try:
    from anarchia.commands.generate import generate
    cli.add_command(generate)
except ImportError as e:
    logger.error(f"Failed to import generate command: {e}")

try:
    from anarchia.commands.sweep import sweep
    cli.add_command(sweep)
except ImportError as e:
    logger.error(f"Failed to import sweep command: {e}")

try:
    from anarchia.commands.verify import verify
    cli.add_command(verify)
except ImportError as e:
    logger.error(f"Failed to import verify command: {e}")


def main():
    cli(prog_name="anarchia")


if __name__ == "__main__":
    main()
