import math
import random

import pytest

from anarchia.corpus import random_game, random_state
from anarchia.equilibrium import (
    Converged,
    best_response_dynamics,
    enumerate_nash,
    optimal_state,
    price_of_anarchy,
    rosenthal_potential,
)
from anarchia.errors import CapExceeded, NoEquilibrium
from anarchia.game import StateProfile, build_game, congestion, improving_move
from anarchia.registry import LatencyRegistry


def test_enumerate_two_links(two_links):
    assert enumerate_nash(two_links) == [StateProfile((0, 1)), StateProfile((1, 0))]


def test_single_player_picks_cheapest():
    game = build_game([1], [[["dear"], ["cheap"]]],
                      {"dear": LatencyRegistry.build("constant", [5]), "cheap": LatencyRegistry.build("constant", [3])})
    assert enumerate_nash(game) == [StateProfile((1,))]


def test_optimal_state(two_links, linear):
    state, cost = optimal_state(two_links)
    assert state == StateProfile((0, 1))
    assert cost == pytest.approx(2.0)

    single = build_game([1, 1], [[["r"]], [["r"]]], {"r": linear})
    assert optimal_state(single)[0] == StateProfile((0, 0))


def test_cap_exceeded(two_links):
    with pytest.raises(CapExceeded) as info:
        enumerate_nash(two_links, cap=3)
    assert info.value.profiles == 4
    with pytest.raises(CapExceeded):
        price_of_anarchy(two_links, cap=3)


@pytest.mark.parametrize("family, params", [
    ("poly_sum", [0, 1]),
    ("poly_sum", [0, 0, 1]),
    ("exp_base", [2]),
    ("constant", [4]),
    ("factorial", []),
])
@pytest.mark.parametrize("n", [2, 3, 4])
def test_identical_parallel_links_have_no_anarchy(parallel_links, family, params, n):
    game = parallel_links(LatencyRegistry.build(family, params), n)
    report = price_of_anarchy(game)
    assert report.poa == pytest.approx(1.0, abs=1e-12)


def test_report_contents(two_links):
    report = price_of_anarchy(two_links)
    assert report.poa == pytest.approx(1.0)
    assert report.worst_nash_state == StateProfile((0, 1))
    assert report.nash_costs == [pytest.approx(2.0), pytest.approx(2.0)]
    data = report.to_dict()
    assert data["optimal_state"] == [0, 1]
    assert [entry["state"] for entry in data["nash_states"]] == [[0, 1], [1, 0]]


def test_pigou_style_network_has_anarchy(linear):
    # one player may share the linear link or pay 2 alone; the shared state is stable
    constant = LatencyRegistry.build("constant", [2])
    game = build_game([1, 1], [[["x"], ["c"]], [["x"]]], {"x": linear, "c": constant})
    report = price_of_anarchy(game)
    assert StateProfile((0, 0)) in report.nash_states
    assert report.poa == pytest.approx(4 / 3)


def test_best_response_from_nash_is_immediate(two_links):
    result = best_response_dynamics(two_links, StateProfile((0, 1)))
    assert result == Converged(StateProfile((0, 1)), 0)


def test_best_response_splits_crowded_links(two_links):
    result = best_response_dynamics(two_links, StateProfile((0, 0)))
    assert isinstance(result, Converged)
    assert result.steps == 1
    assert result.state in (StateProfile((0, 1)), StateProfile((1, 0)))


def test_uniform_games_converge_and_potential_descends():
    rng = random.Random(7)
    families = [LatencyRegistry.build("poly_sum", [0, 1]), LatencyRegistry.build("poly_sum", [1, 0, 1])]
    for _ in range(60):
        game = random_game(rng, families)
        unit = build_game([1] * game.n_players,
                          [[sorted(s) for s in options] for options in game.strategies],
                          game.latency, resources=game.resources)
        state = random_state(rng, unit)
        potential = rosenthal_potential(unit, state)
        for _ in range(1000):
            loads = congestion(unit, state)
            for player in range(unit.n_players):
                move = improving_move(unit, state, player, loads)
                if move is not None:
                    break
            else:
                break
            state = state.replace(player, move[0])
            new_potential = rosenthal_potential(unit, state)
            assert new_potential < potential
            potential = new_potential
        assert isinstance(best_response_dynamics(unit, random_state(rng, unit)), Converged)
        assert enumerate_nash(unit)


def test_rosenthal_needs_uniform_weights(linear):
    game = build_game([1, 2], [[["r"]], [["r"]]], {"r": linear})
    with pytest.raises(ValueError):
        rosenthal_potential(game, StateProfile((0, 0)))


def test_saturated_game_has_no_anarchy():
    game = build_game(
        [200],
        [[["slow"], ["flat"]]],
        {"slow": LatencyRegistry.build("factorial", []), "flat": LatencyRegistry.build("constant", [5])},
    )
    report = price_of_anarchy(game)
    assert report.nash_states == [StateProfile((1,))]
    assert report.optimal_cost == pytest.approx(1000.0)
    assert report.poa == pytest.approx(1.0)


def test_weighted_best_response_cycle_has_no_equilibrium(cycling_game):
    assert enumerate_nash(cycling_game) == []
    with pytest.raises(NoEquilibrium):
        price_of_anarchy(cycling_game)
    for state in cycling_game.profiles():
        assert improving_move(cycling_game, state, 0, congestion(cycling_game, state)) is not None or \
            improving_move(cycling_game, state, 1, congestion(cycling_game, state)) is not None


def test_free_optimum_makes_anarchy_infinite(monkeypatch):
    flat = LatencyRegistry.build("constant", [1])
    game = build_game([1], [[["a"], ["b"]]], {"a": flat, "b": flat})
    costs = {StateProfile((0,)): 0.0, StateProfile((1,)): 2.0}
    monkeypatch.setattr("anarchia.equilibrium.social_cost", lambda g, state, loads=None: costs[state])
    report = price_of_anarchy(game)
    assert report.optimal_cost == 0.0
    assert report.poa == math.inf
    assert report.to_dict()["poa"] == "inf"
