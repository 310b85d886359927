import logging
import sys

import click

from anarchia.commands import fail
from anarchia.errors import NoFeasibleParams
from anarchia.experiments import SweepConfig, run_sweep, write_sweep_csv

logger = logging.getLogger(__name__)


@click.command()
@click.argument("config_file", type=click.Path(dir_okay=False))
@click.option("--out", type=click.Path(dir_okay=False), help="CSV path (default: config 'out', else stdout).")
def sweep(config_file, out):
    """Best lower-bound ratio per player budget n, next to the predicted and upper bounds."""
    try:
        config = SweepConfig.load(config_file)
    except ValueError as e:
        fail(e)

    try:
        rows = run_sweep(config)
    except NoFeasibleParams as e:
        fail(e)
    except Exception as e:
        logger.error(f"Unexpected error in sweep {config_file}: {e}", exc_info=True)
        raise

    target = out or config.out
    if target:
        with open(target, "w", encoding="utf-8", newline="") as handle:
            write_sweep_csv(rows, handle)
        logger.info(f"Wrote {len(rows)} sweep rows to {target}")
    else:
        write_sweep_csv(rows, sys.stdout)
