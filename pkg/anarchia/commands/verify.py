import csv
import logging
import sys

import click

from anarchia.commands import emit_json, fail
from anarchia.constants import EXIT_PROPERTY_FAILURE
from anarchia.decomposition import build_classes, table_rows
from anarchia.equilibrium import price_of_anarchy
from anarchia.experiments import run_verify_suite
from anarchia.game import load_game
from anarchia.utils import format_csv_real

logger = logging.getLogger(__name__)

TABLE_HEADER = ["j", "t", "k", "config", "i", "lambda", "f", "g", "side", "resources"]


def write_class_table(game_file: str) -> None:
    """Class table of the worst Nash state against the optimum, as CSV on stdout"""
    game = load_game(game_file)
    report = price_of_anarchy(game)
    table = build_classes(game, report.worst_nash_state, report.optimal_state)
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(TABLE_HEADER)
    for row in table_rows(table):
        writer.writerow([
            format_csv_real(row[name]) if isinstance(row[name], float) else row[name]
            for name in TABLE_HEADER
        ])


@click.command()
@click.option("--corpus", type=click.Path(file_okay=False), help="Directory of game files checked before the random games.")
@click.option("--seed", default=42, show_default=True, type=int)
@click.option("--count", default=500, show_default=True, type=int, help="Number of random games.")
@click.option("--out", type=click.Path(file_okay=False),
              help="Directory for reproduction files of failures (default ANARCHIA_REPRO_DIR, then ./repro).")
@click.option("--game", "game_file", type=click.Path(dir_okay=False),
              help="Print the class table of one game's worst equilibrium instead of running the suite.")
def verify(corpus, seed, count, out, game_file):
    """Run the property suite and print a pass/fail summary."""
    if game_file:
        try:
            write_class_table(game_file)
        except ValueError as e:
            fail(e)
        return

    if count < 0:
        fail(ValueError(f"--count must be >= 0, got {count}"))
    try:
        summary = run_verify_suite(corpus, seed, count, out)
    except ValueError as e:
        fail(e)
    except Exception as e:
        logger.error(f"Unexpected error in verify suite: {e}", exc_info=True)
        raise

    emit_json(summary.to_dict())
    if not summary.ok:
        logger.error(f"{len(summary.failures)} property checks failed")
        raise click.exceptions.Exit(EXIT_PROPERTY_FAILURE)
