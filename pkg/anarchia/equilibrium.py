"""
Exhaustive search for pure Nash equilibria, the social optimum and the exact price of
anarchy of small games, plus best-response dynamics for larger ones.

Enumeration walks profiles in lexicographic order. With ANARCHIA_THREADS > 1 and a large
profile space the space is split on the first player's strategy and scanned in worker
processes; blocks are merged in order, so parallel and serial runs give identical reports.
"""

import itertools
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, NamedTuple, Optional, Tuple, Union

from anarchia.constants import DEFAULT_CAP, DEFAULT_MAX_STEPS, PARALLEL_MIN_PROFILES
from anarchia.errors import CapExceeded, NoEquilibrium
from anarchia.game import (
    Game,
    StateProfile,
    congestion,
    improving_move,
    is_nash,
    social_cost,
)
from anarchia.utils import render_real, worker_count

logger = logging.getLogger(__name__)


@dataclass
class EquilibriumReport:
    nash_states: List[StateProfile]
    optimal_state: StateProfile
    optimal_cost: float
    worst_nash_state: Optional[StateProfile]
    worst_nash_cost: Optional[float]
    poa: Optional[float]
    nash_costs: List[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "poa": render_real(self.poa),
            "optimal_cost": render_real(self.optimal_cost),
            "optimal_state": list(self.optimal_state.choice),
            "worst_nash_cost": render_real(self.worst_nash_cost),
            "worst_nash_state": list(self.worst_nash_state.choice) if self.worst_nash_state else None,
            "nash_states": [
                {"state": list(s.choice), "social_cost": render_real(c)}
                for s, c in zip(self.nash_states, self.nash_costs)
            ],
        }


class Converged(NamedTuple):
    state: StateProfile
    steps: int


class NonConvergence(NamedTuple):
    last_state: StateProfile
    steps: int


class _Block(NamedTuple):
    nash: List[Tuple[StateProfile, float]]
    best_state: StateProfile
    best_cost: float


def _check_cap(game: Game, cap: int) -> int:
    profiles = game.profile_count()
    if profiles > cap:
        raise CapExceeded(profiles, cap)
    return profiles


def _scan_block(game: Game, first: Optional[int]) -> _Block:
    ranges = [range(len(options)) for options in game.strategies]
    if first is not None:
        ranges[0] = range(first, first + 1)
    nash = []
    best_state, best_cost = None, None
    for choice in itertools.product(*ranges):
        state = StateProfile(choice)
        loads = congestion(game, state)
        cost = social_cost(game, state, loads)
        if best_cost is None or cost < best_cost:
            best_state, best_cost = state, cost
        if all(improving_move(game, state, p, loads) is None for p in range(game.n_players)):
            nash.append((state, cost))
    return _Block(nash, best_state, best_cost)


def _scan(game: Game, cap: int) -> _Block:
    profiles = _check_cap(game, cap)
    workers = worker_count()
    if workers == 1 or profiles < PARALLEL_MIN_PROFILES or len(game.strategies[0]) == 1:
        return _scan_block(game, None)
    firsts = list(range(len(game.strategies[0])))
    logger.info(f"Scanning {profiles} profiles in {len(firsts)} blocks on {workers} workers")
    with ProcessPoolExecutor(max_workers=workers) as pool:
        blocks = list(pool.map(_scan_block, [game] * len(firsts), firsts))
    nash = [entry for block in blocks for entry in block.nash]
    best = blocks[0]
    for block in blocks[1:]:
        if block.best_cost < best.best_cost:
            best = block
    return _Block(nash, best.best_state, best.best_cost)


def enumerate_nash(game: Game, cap: int = DEFAULT_CAP) -> List[StateProfile]:
    """All pure Nash equilibria in lexicographic profile order"""
    _check_cap(game, cap)
    return [state for state in game.profiles() if is_nash(game, state).holds]


def optimal_state(game: Game, cap: int = DEFAULT_CAP) -> Tuple[StateProfile, float]:
    """Minimum social cost state, lowest profile on ties"""
    _check_cap(game, cap)
    best_state, best_cost = None, None
    for state in game.profiles():
        cost = social_cost(game, state)
        if best_cost is None or cost < best_cost:
            best_state, best_cost = state, cost
    return best_state, best_cost


def price_of_anarchy(game: Game, cap: int = DEFAULT_CAP) -> EquilibriumReport:
    block = _scan(game, cap)
    if not block.nash:
        raise NoEquilibrium("Game has no pure Nash equilibrium")
    worst_state, worst_cost = block.nash[0]
    for state, cost in block.nash[1:]:
        if cost > worst_cost:
            worst_state, worst_cost = state, cost
    if block.best_cost > 0:
        poa = worst_cost / block.best_cost
    else:
        poa = math.inf if worst_cost > 0 else 1.0
    logger.info(
        f"Exhaustive PoA {poa:.6g} over {game.profile_count()} profiles, "
        f"{len(block.nash)} Nash states"
    )
    return EquilibriumReport(
        nash_states=[s for s, _ in block.nash],
        optimal_state=block.best_state,
        optimal_cost=block.best_cost,
        worst_nash_state=worst_state,
        worst_nash_cost=worst_cost,
        poa=poa,
        nash_costs=[c for _, c in block.nash],
    )


def best_response_dynamics(game: Game, start: StateProfile,
                           max_steps: int = DEFAULT_MAX_STEPS) -> Union[Converged, NonConvergence]:
    """
    Repeatedly let the lowest-indexed player with an improving move switch to its best
    strategy (lowest index on ties). Returns Converged at a Nash state or NonConvergence
    after max_steps moves.
    """
    game.validate_state(start)
    state = start
    for step in range(max_steps + 1):
        loads = congestion(game, state)
        for player in range(game.n_players):
            move = improving_move(game, state, player, loads)
            if move is not None:
                alt, new_cost, old_cost = move
                if new_cost > old_cost:
                    raise AssertionError(f"Move of player {player} does not lower its cost")
                logger.debug(f"Step {step}: player {player} -> strategy {alt} ({old_cost:.6g} -> {new_cost:.6g})")
                break
        else:
            return Converged(state, step)
        if step == max_steps:
            break
        state = state.replace(player, alt)
    logger.warning(f"Best-response dynamics did not converge in {max_steps} steps")
    return NonConvergence(state, max_steps)


def rosenthal_potential(game: Game, state: StateProfile) -> float:
    """
    Phi(S) = sum_r sum_{m=1..n_r} l_r(m*w) for games where every player has weight w.
    """
    weights = game.distinct_weights()
    if len(weights) != 1:
        raise ValueError("Rosenthal potential needs uniform player weights")
    w = weights[0]
    users = {r: 0 for r in game.resources}
    for player in range(game.n_players):
        for r in game.chosen(state, player):
            users[r] += 1
    return sum(
        game.latency[r].eval(float(m * Fraction(w)))
        for r in game.resources
        for m in range(1, users[r] + 1)
    )
