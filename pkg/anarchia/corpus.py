"""
Seeded random small games for the property suites, and reproduction files for failures.
"""

import json
import logging
import os
import random
from typing import List, Optional, Sequence, Tuple

from anarchia.constants import (
    CORPUS_MAX_PLAYERS,
    CORPUS_MAX_RESOURCES,
    CORPUS_MAX_STRATEGIES,
    CORPUS_WEIGHTS,
)
from anarchia.game import Game, StateProfile, build_game, game_to_dict
from anarchia.latency.base import LatencyFunction
from anarchia.registry import LatencyRegistry

logger = logging.getLogger(__name__)

# polynomially bounded latencies used by default: x, x^2, 1+x, x^2 (1 + ln x), constant
DEFAULT_FAMILIES: Tuple[Tuple[str, list], ...] = (
    ("poly_sum", [0, 1]),
    ("poly_sum", [0, 0, 1]),
    ("poly_sum", [1, 1]),
    ("poly_log_product", [[0, 0, 1], [1, 1]]),
    ("constant", [1]),
)


def default_latencies() -> List[LatencyFunction]:
    return [LatencyRegistry.build(name, params) for name, params in DEFAULT_FAMILIES]


def random_game(rng: random.Random, families: Optional[Sequence[LatencyFunction]] = None) -> Game:
    """
    Random game with at most CORPUS_MAX_PLAYERS players, CORPUS_MAX_RESOURCES resources and
    CORPUS_MAX_STRATEGIES distinct strategies per player, weights drawn from CORPUS_WEIGHTS.
    The draw sequence depends only on rng.
    """
    families = list(families) if families else default_latencies()
    n_players = rng.randint(1, CORPUS_MAX_PLAYERS)
    n_resources = rng.randint(1, CORPUS_MAX_RESOURCES)
    resources = [f"r{k}" for k in range(n_resources)]
    latency = {r: families[rng.randrange(len(families))] for r in resources}
    weights = [CORPUS_WEIGHTS[rng.randrange(len(CORPUS_WEIGHTS))] for _ in range(n_players)]

    strategies = []
    for _ in range(n_players):
        wanted = rng.randint(1, CORPUS_MAX_STRATEGIES)
        options = []
        for _ in range(wanted):
            size = rng.randint(1, n_resources)
            choice = sorted(rng.sample(resources, size))
            if choice not in options:
                options.append(choice)
        strategies.append(options)
    return build_game(weights, strategies, latency, resources=resources)


def random_state(rng: random.Random, game: Game) -> StateProfile:
    return StateProfile(tuple(rng.randrange(len(options)) for options in game.strategies))


def write_game(game: Game, directory: str, name: str, failure: Optional[dict] = None) -> str:
    """Write game (plus what failed on it) as a loadable game file; returns the path."""
    os.makedirs(directory, exist_ok=True)
    path = os.path.join(directory, f"{name}.json")
    data = game_to_dict(game)
    if failure is not None:
        data["failure"] = failure
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(data, handle, indent=2, sort_keys=False)
        handle.write("\n")
    logger.warning(f"Wrote reproduction file {path}")
    return path
