import json
import logging
import os

import click

from anarchia import lb_generator
from anarchia.commands import emit_json, fail
from anarchia.game import save_game
from anarchia.registry import LatencyRegistry, parse_cli_params
from anarchia.utils import parse_weight

logger = logging.getLogger(__name__)

COUNT_FLAGS = ("alpha", "beta", "gamma", "delta", "zeta1", "zeta2", "kappa1", "kappa2")


def sidecar_path(out: str) -> str:
    """inst.json -> inst.sidecar.json"""
    root, ext = os.path.splitext(out)
    return f"{root if ext == '.json' else out}.sidecar.json"


@click.command()
@click.option("--family", required=True, help="Latency family id shared by every resource.")
@click.option("--params", default="", help="Comma list of family parameters.")
@click.option("--w", "weight", default="1", show_default=True, help="Player weight (rational).")
@click.option("--alpha", type=int)
@click.option("--beta", type=int)
@click.option("--gamma", type=int)
@click.option("--delta", type=int)
@click.option("--zeta1", type=int)
@click.option("--zeta2", type=int)
@click.option("--kappa1", type=int)
@click.option("--kappa2", type=int)
@click.option("--search", is_flag=True, help="Search the best parameters instead of taking them as flags.")
@click.option("--n-max", type=int, default=8, show_default=True, help="Player budget for --search.")
@click.option("--tune-weight", is_flag=True, help="With --search, try the weight at which strategy costs tie.")
@click.option("--out", required=True, type=click.Path(dir_okay=False), help="Game file to write.")
def generate(family, params, weight, search, n_max, tune_weight, out, **counts):
    """Build a two-ring lower-bound game and write it with its sidecar."""
    try:
        f = LatencyRegistry.build(family, parse_cli_params(family, params))
        w = parse_weight(weight)
        if search:
            lb_params, _ = lb_generator.search_params(f, w, n_max, tune_weight=tune_weight)
        else:
            missing = [name for name in COUNT_FLAGS if counts[name] is None]
            if missing:
                raise click.UsageError(f"Missing --{', --'.join(missing)} (or pass --search)")
            lb_params = lb_generator.LBParams(*(counts[name] for name in COUNT_FLAGS), w=w, latency=f)
        instance = lb_generator.build(lb_params)
    except ValueError as e:
        fail(e)

    verdict = lb_generator.verify_nash(instance)
    ratio = lb_generator.ratio_lower_bound(instance) if verdict.holds else None
    if not verdict.holds:
        logger.warning(f"State S of {lb_params.key()} is not a Nash equilibrium (player {verdict.witness} deviates)")

    data = lb_generator.sidecar(instance, ratio)
    data["nash"] = verdict.holds
    save_game(instance.game, out)
    with open(sidecar_path(out), "w", encoding="utf-8") as handle:
        json.dump(data, handle, indent=2)
        handle.write("\n")
    logger.info(f"Wrote {out} ({lb_params.n} players) and {sidecar_path(out)}")
    emit_json(data)
