import logging
import os

import click

from anarchia.commands import emit_json, fail
from anarchia.constants import DEFAULT_CAP
from anarchia.equilibrium import price_of_anarchy
from anarchia.errors import CapExceeded, NoEquilibrium
from anarchia.game import load_game

logger = logging.getLogger(__name__)


def _default_cap() -> int:
    raw = os.getenv("ANARCHIA_CAP", str(DEFAULT_CAP))
    try:
        return int(raw)
    except ValueError:
        logger.warning(f"Ignoring invalid ANARCHIA_CAP={raw!r}, using {DEFAULT_CAP}")
        return DEFAULT_CAP


@click.command()
@click.argument("game_file", type=click.Path(dir_okay=False))
@click.option("--cap", default=_default_cap, type=int, show_default="ANARCHIA_CAP or 2000000",
              help="Largest profile space to enumerate.")
def brute(game_file, cap):
    """Enumerate all pure Nash equilibria of a game file and report its price of anarchy."""
    try:
        game = load_game(game_file)
    except ValueError as e:
        fail(e)

    logger.info(f"Loaded {game_file}: {game.n_players} players, {len(game.resources)} resources, "
                f"{game.profile_count()} profiles")
    try:
        report = price_of_anarchy(game, cap)
    except (CapExceeded, NoEquilibrium) as e:
        fail(e)
    except Exception as e:
        logger.error(f"Unexpected error enumerating {game_file}: {e}", exc_info=True)
        raise

    emit_json(report.to_dict())
