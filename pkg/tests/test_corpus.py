import json
import random

from anarchia.constants import CORPUS_MAX_PLAYERS, CORPUS_MAX_RESOURCES, CORPUS_MAX_STRATEGIES, CORPUS_WEIGHTS
from anarchia.corpus import default_latencies, random_game, random_state, write_game
from anarchia.game import game_to_dict, load_game


def test_random_games_respect_bounds():
    rng = random.Random(1)
    for _ in range(100):
        game = random_game(rng)
        assert 1 <= game.n_players <= CORPUS_MAX_PLAYERS
        assert 1 <= len(game.resources) <= CORPUS_MAX_RESOURCES
        for player, options in zip(game.players, game.strategies):
            assert player.weight in CORPUS_WEIGHTS
            assert 1 <= len(options) <= CORPUS_MAX_STRATEGIES
            assert len(set(options)) == len(options)
            assert all(options)


def test_random_games_are_seeded():
    first = [game_to_dict(random_game(random.Random(9))) for _ in range(3)]
    second = [game_to_dict(random_game(random.Random(9))) for _ in range(3)]
    assert first == second


def test_random_state_is_valid(rng):
    game = random_game(rng)
    random_state(rng, game)
    for _ in range(20):
        game.validate_state(random_state(rng, game))


def test_default_latencies_are_polynomially_bounded():
    assert {f.class_tag.value for f in default_latencies()} == {"L3"}


def test_reproduction_file_loads(tmp_path, two_links):
    path = write_game(two_links, str(tmp_path / "repro"), "ratio_identity-0", {"check": "ratio_identity"})
    data = json.loads(open(path, encoding="utf-8").read())
    assert data["failure"] == {"check": "ratio_identity"}
    assert load_game(path).strategies == two_links.strategies
