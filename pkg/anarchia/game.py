"""
Game model for weighted unsplittable congestion games: players with rational weights,
resources with latency functions, finite pure strategy sets. Congestions are exact
Fractions; latencies are converted to float only when evaluated.
"""

import itertools
import json
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, FrozenSet, Iterator, List, NamedTuple, Optional, Sequence, Tuple, Union

from scipy.special import logsumexp

from anarchia.constants import EQ_REL_TOL
from anarchia.errors import GameFormatError, InvalidLatency
from anarchia.latency.base import LatencyFunction
from anarchia.registry import LatencyRegistry
from anarchia.utils import parse_weight, render_rational

logger = logging.getLogger(__name__)

CongestionMap = Dict[str, Fraction]
PlayerRef = Union[int, str]


class Player(NamedTuple):
    player_id: str
    weight: Fraction


@dataclass(frozen=True, order=True)
class StateProfile:
    """One strategy index per player, in player order."""

    choice: Tuple[int, ...]

    def replace(self, player: int, strategy: int) -> "StateProfile":
        choice = list(self.choice)
        choice[player] = strategy
        return StateProfile(tuple(choice))


class NashCheck(NamedTuple):
    holds: bool
    witness: Optional[Tuple[int, int]]  # (player index, better strategy index)


@dataclass(frozen=True)
class Game:
    players: Tuple[Player, ...]
    resources: Tuple[str, ...]
    strategies: Tuple[Tuple[FrozenSet[str], ...], ...]
    latency: Dict[str, LatencyFunction]

    def __post_init__(self):
        if not self.players:
            raise GameFormatError("Game needs at least one player")
        if not self.resources:
            raise GameFormatError("Game needs at least one resource")
        if len(set(self.resources)) != len(self.resources):
            raise GameFormatError("Resource ids must be unique")
        if len({p.player_id for p in self.players}) != len(self.players):
            raise GameFormatError("Player ids must be unique")
        if len(self.strategies) != len(self.players):
            raise GameFormatError("Every player needs a strategy set")
        known = set(self.resources)
        for player, options in zip(self.players, self.strategies):
            if player.weight <= 0:
                raise GameFormatError(f"Player {player.player_id} has non-positive weight")
            if not options:
                raise GameFormatError(f"Player {player.player_id} has no strategies")
            for strategy in options:
                unknown = set(strategy) - known
                if unknown:
                    raise GameFormatError(
                        f"Player {player.player_id} uses unknown resources {sorted(unknown)}"
                    )
        missing = known - set(self.latency)
        if missing:
            raise GameFormatError(f"Resources without latency: {sorted(missing)}")

    @property
    def n_players(self) -> int:
        return len(self.players)

    @property
    def w_max(self) -> Fraction:
        return max(p.weight for p in self.players)

    def weight(self, player: int) -> Fraction:
        return self.players[player].weight

    def player_index(self, ref: PlayerRef) -> int:
        if isinstance(ref, int):
            if not 0 <= ref < self.n_players:
                raise IndexError(f"No player at index {ref}")
            return ref
        for index, player in enumerate(self.players):
            if player.player_id == ref:
                return index
        raise KeyError(f"Unknown player id {ref!r}")

    def strategy(self, player: int, index: int) -> FrozenSet[str]:
        return self.strategies[player][index]

    def chosen(self, state: StateProfile, player: int) -> FrozenSet[str]:
        return self.strategies[player][state.choice[player]]

    def profile_count(self) -> int:
        return math.prod(len(options) for options in self.strategies)

    def profiles(self) -> Iterator[StateProfile]:
        """All states in lexicographic order"""
        for choice in itertools.product(*(range(len(o)) for o in self.strategies)):
            yield StateProfile(choice)

    def distinct_latencies(self) -> List[LatencyFunction]:
        seen = []
        for resource in self.resources:
            f = self.latency[resource]
            if f not in seen:
                seen.append(f)
        return seen

    def distinct_weights(self) -> List[Fraction]:
        return sorted({p.weight for p in self.players})

    def validate_state(self, state: StateProfile) -> None:
        if len(state.choice) != self.n_players:
            raise ValueError(f"State has {len(state.choice)} entries for {self.n_players} players")
        for player, index in enumerate(state.choice):
            if not 0 <= index < len(self.strategies[player]):
                raise ValueError(f"Invalid strategy index {index} for player {player}")


def congestion(game: Game, state: StateProfile) -> CongestionMap:
    """Exact total weight on every resource; unused resources map to 0."""
    loads = {r: Fraction(0) for r in game.resources}
    for player, strategy_index in enumerate(state.choice):
        weight = game.players[player].weight
        for r in game.strategies[player][strategy_index]:
            loads[r] += weight
    return loads


def resource_cost(game: Game, resource: str, load: Fraction) -> float:
    return game.latency[resource].eval(float(load))


def _exact_cost(game: Game, loads: CongestionMap, resources) -> Optional[Fraction]:
    total = Fraction(0)
    for r in resources:
        value = game.latency[r].exact_eval(loads[r])
        if value is None:
            return None
        total += value
    return total


def _deviation_loads(game: Game, loads: CongestionMap, player: int,
                     current: FrozenSet[str], alt: FrozenSet[str]) -> CongestionMap:
    weight = game.players[player].weight
    return {r: loads[r] if r in current else loads[r] + weight for r in alt}


def player_cost(game: Game, state: StateProfile, player: PlayerRef,
                loads: Optional[CongestionMap] = None) -> float:
    """Sum of latencies over the player's chosen resources"""
    index = game.player_index(player)
    loads = loads if loads is not None else congestion(game, state)
    return sum(resource_cost(game, r, loads[r]) for r in game.chosen(state, index))


def deviation_cost(game: Game, state: StateProfile, player: PlayerRef, alt_strategy_index: int,
                   loads: Optional[CongestionMap] = None) -> float:
    """
    Cost of the player after switching alone to alt_strategy_index. Resources in both the
    old and the new strategy keep the player's weight, so their congestion is unchanged.
    """
    index = game.player_index(player)
    loads = loads if loads is not None else congestion(game, state)
    alt = game.strategy(index, alt_strategy_index)
    new_loads = _deviation_loads(game, loads, index, game.chosen(state, index), alt)
    return sum(resource_cost(game, r, new_loads[r]) for r in alt)


def social_cost(game: Game, state: StateProfile, loads: Optional[CongestionMap] = None) -> float:
    """SC(S) = sum_r l_r(C_r) * C_r, with idle resources contributing 0"""
    loads = loads if loads is not None else congestion(game, state)
    total = 0.0
    for r in game.resources:
        load = loads[r]
        if load > 0:
            total += resource_cost(game, r, load) * float(load)
    return total


def _log_cost(game: Game, loads: CongestionMap, resources) -> float:
    return float(logsumexp([game.latency[r].log_eval(float(loads[r])) for r in resources]))


def improving_move(game: Game, state: StateProfile, player: int,
                   loads: CongestionMap) -> Optional[Tuple[int, float, float]]:
    """
    Best strictly improving strategy for one player as (index, new cost, old cost), or
    None. Costs are compared exactly when both sides are rational, otherwise with a
    relative tolerance so exact ties count as stable. Once the current cost saturates
    to +inf the comparison moves to the log domain.
    """
    current = game.chosen(state, player)
    exact_now = _exact_cost(game, loads, current)
    cost_now = sum(resource_cost(game, r, loads[r]) for r in current)
    saturated = math.isinf(cost_now)
    if saturated:
        log_now = _log_cost(game, loads, current)
        log_tolerance = math.log1p(EQ_REL_TOL)
    else:
        tolerance = EQ_REL_TOL * max(1.0, cost_now)
    best = None
    best_key = None
    for alt_index, alt in enumerate(game.strategies[player]):
        if alt_index == state.choice[player]:
            continue
        new_loads = _deviation_loads(game, loads, player, current, alt)
        exact_alt = _exact_cost(game, new_loads, alt) if exact_now is not None else None
        cost_alt = sum(resource_cost(game, r, new_loads[r]) for r in alt)
        if exact_now is not None and exact_alt is not None:
            improves, key = exact_alt < exact_now, cost_alt
        elif saturated:
            log_alt = _log_cost(game, new_loads, alt)
            improves, key = log_alt < log_now - log_tolerance, log_alt
        else:
            improves, key = cost_alt < cost_now - tolerance, cost_alt
        if improves and (best_key is None or key < best_key):
            best, best_key = (alt_index, cost_alt, cost_now), key
    return best


def is_nash(game: Game, state: StateProfile) -> NashCheck:
    loads = congestion(game, state)
    for player in range(game.n_players):
        move = improving_move(game, state, player, loads)
        if move is not None:
            return NashCheck(False, (player, move[0]))
    return NashCheck(True, None)


# Game file format


def game_from_dict(data: dict) -> Game:
    try:
        players = tuple(
            Player(str(p["id"]), parse_weight(p["weight"])) for p in data["players"]
        )
        resources = tuple(str(r) for r in data["resources"])
        raw_strategies = data["strategies"]
        strategies = tuple(
            tuple(frozenset(str(r) for r in strategy) for strategy in raw_strategies[p.player_id])
            for p in players
        )
        latency = {str(r): LatencyRegistry.from_spec(spec) for r, spec in data["latency"].items()}
    except (KeyError, TypeError, AttributeError) as e:
        raise GameFormatError(f"Malformed game description: missing or invalid {e}")
    except InvalidLatency as e:
        raise GameFormatError(f"Invalid latency in game description: {e}")
    except ValueError as e:
        raise GameFormatError(f"Invalid game description: {e}")
    return Game(players, resources, strategies, latency)


def game_to_dict(game: Game) -> dict:
    order = {r: k for k, r in enumerate(game.resources)}
    return {
        "players": [
            {"id": p.player_id, "weight": render_rational(p.weight)} for p in game.players
        ],
        "resources": list(game.resources),
        "strategies": {
            p.player_id: [sorted(s, key=order.__getitem__) for s in options]
            for p, options in zip(game.players, game.strategies)
        },
        "latency": {r: game.latency[r].to_spec() for r in game.resources},
    }


def load_game(path) -> Game:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            data = json.load(handle)
    except (OSError, json.JSONDecodeError) as e:
        raise GameFormatError(f"Cannot read game file {path}: {e}")
    try:
        return game_from_dict(data)
    except GameFormatError as e:
        raise GameFormatError(f"{path}: {e}")


def save_game(game: Game, path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(game_to_dict(game), handle, indent=2)
        handle.write("\n")


def build_game(weights: Sequence, strategies: Sequence[Sequence[Sequence[str]]],
               latency: Dict[str, LatencyFunction], resources: Optional[Sequence[str]] = None,
               ids: Optional[Sequence[str]] = None) -> Game:
    """Convenience constructor used by generators and tests."""
    ids = list(ids) if ids is not None else [f"p{k + 1}" for k in range(len(weights))]
    resources = tuple(resources) if resources is not None else tuple(latency)
    return Game(
        players=tuple(Player(pid, parse_weight(w)) for pid, w in zip(ids, weights)),
        resources=resources,
        strategies=tuple(tuple(frozenset(s) for s in options) for options in strategies),
        latency=dict(latency),
    )
