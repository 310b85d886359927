import json
import random

import pytest

from anarchia.game import build_game, game_to_dict
from anarchia.registry import LatencyRegistry


@pytest.fixture
def linear():
    return LatencyRegistry.build("poly_sum", [0, 1])


@pytest.fixture
def quadratic():
    return LatencyRegistry.build("poly_sum", [0, 0, 1])


@pytest.fixture
def exponential():
    return LatencyRegistry.build("exp_base", [2])


@pytest.fixture
def two_links(linear):
    """Two identical l(x) = x links, two unit players that may use either one"""
    return build_game(
        [1, 1],
        [[["e1"], ["e2"]], [["e1"], ["e2"]]],
        {"e1": linear, "e2": linear},
    )


@pytest.fixture
def rng():
    return random.Random(42)


@pytest.fixture
def game_file(tmp_path, two_links):
    path = tmp_path / "two_links.json"
    path.write_text(json.dumps(game_to_dict(two_links)), encoding="utf-8")
    return path


@pytest.fixture
def parallel_links():
    """Factory: n unit players choosing one of n_links identical links"""

    def make(latency, n_players, n_links=2):
        links = [f"e{k + 1}" for k in range(n_links)]
        return build_game(
            [1] * n_players,
            [[[r] for r in links] for _ in range(n_players)],
            {r: latency for r in links},
        )

    return make


@pytest.fixture
def cycling_game():
    """
    Weights 1 and 2 on links r, u with l(x) = 4.5 x and s, t with l(x) = x^2. Every state
    has a player with a strictly better strategy, so there is no pure equilibrium.
    """
    steep = LatencyRegistry.build("poly_sum", [0, 4.5])
    square = LatencyRegistry.build("poly_sum", [0, 0, 1])
    return build_game(
        [1, 2],
        [[["r", "s"], ["t", "u"]], [["r", "t"], ["s", "u"]]],
        {"r": steep, "s": square, "t": square, "u": steep},
    )


@pytest.fixture
def cycling_game_file(tmp_path, cycling_game):
    path = tmp_path / "cycling.json"
    path.write_text(json.dumps(game_to_dict(cycling_game)), encoding="utf-8")
    return path
