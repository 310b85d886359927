"""
Resource equivalence classes of a (state, reference state) pair.

Resources are grouped by exact congestion j in the state, exact congestion t in the
reference, latency function k and the multiset of player weights that use the resource in
the reference. Each class carries, per weight i, the share lambda of the reference cost it
accounts for and the load term f (g = -f). From the table the coordination ratio
SC(S)/SC(S_ref) is rebuilt exactly, and for equilibrium states the overloaded mass is
bounded by the underloaded mass.
"""

import enum
import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterator, List, NamedTuple, Tuple

from scipy.special import logsumexp

from anarchia.constants import EQ_REL_TOL, TRIPLE_RESIDUAL_TOL
from anarchia.errors import RefCostZero
from anarchia.game import Game, StateProfile, congestion
from anarchia.latency.base import LatencyFunction
from anarchia.utils import render_rational, safe_exp

logger = logging.getLogger(__name__)

WeightConfig = Tuple[Tuple[Fraction, int], ...]


class Side(enum.Enum):
    OVERLOADED = "overloaded"
    UNDERLOADED = "underloaded"


class ClassKey(NamedTuple):
    j: Fraction
    t: Fraction
    k: LatencyFunction
    config: WeightConfig


@dataclass
class WeightEntry:
    i: Fraction
    alpha: int
    lam: float
    f: float

    @property
    def g(self) -> float:
        return -self.f

    @property
    def side(self) -> Side:
        return classify_triple_side(self.f, self.g)


@dataclass
class ClassRow:
    key: ClassKey
    resources: List[str]
    entries: List[WeightEntry]
    # j l(j) / (t l(t)), the localized coordination ratio
    local_ratio: float


@dataclass
class ZeroRow:
    j: Fraction
    k: LatencyFunction
    resources: List[str]
    lam: float
    f: float  # f^{0,0} = j l(j)


@dataclass
class ClassTable:
    rows: Dict[ClassKey, ClassRow]
    lambda_zero: Dict[Tuple[Fraction, LatencyFunction], ZeroRow]
    sc_opt: float
    sc_state: float
    reference: str = "optimal"
    notes: List[str] = field(default_factory=list)


class ConstraintCheck(NamedTuple):
    lhs: float
    rhs: float
    holds: bool


def _log_load_cost(f: LatencyFunction, load: Fraction) -> float:
    """ln(load * l(load)), -inf for an idle resource"""
    if load == 0:
        return -math.inf
    return math.log(load) + f.log_eval(float(load))


def _log_social_cost(game: Game, loads) -> float:
    terms = [_log_load_cost(game.latency[r], loads[r]) for r in game.resources if loads[r] > 0]
    if not terms:
        return -math.inf
    return float(logsumexp(terms))


def load_term(f: LatencyFunction, j: Fraction, t: Fraction, i: Fraction) -> float:
    """f = j l(j) / (t l(t)) - l(j+i) / l(t)"""
    log_t_cost = _log_load_cost(f, t)
    first = safe_exp(_log_load_cost(f, j) - log_t_cost) if j > 0 else 0.0
    second = safe_exp(f.log_eval(float(j + i)) - f.log_eval(float(t)))
    return first - second


def build_classes(game: Game, state_s: StateProfile, state_ref: StateProfile,
                  reference: str = "optimal") -> ClassTable:
    """
    Group the resources of game into equivalence classes for the pair (state_s, state_ref).
    reference labels the role of state_ref ("optimal" when it is the exhaustive optimum).
    """
    game.validate_state(state_s)
    game.validate_state(state_ref)
    loads_s = congestion(game, state_s)
    loads_ref = congestion(game, state_ref)
    log_sc_ref = _log_social_cost(game, loads_ref)
    if log_sc_ref == -math.inf:
        raise RefCostZero("Reference state has zero social cost")
    log_sc_s = _log_social_cost(game, loads_s)

    users_ref: Dict[str, Counter] = {r: Counter() for r in game.resources}
    for player in range(game.n_players):
        for r in game.chosen(state_ref, player):
            users_ref[r][game.weight(player)] += 1

    grouped: Dict[ClassKey, List[str]] = {}
    zero: Dict[Tuple[Fraction, LatencyFunction], List[str]] = {}
    for r in game.resources:
        j, t, k = loads_s[r], loads_ref[r], game.latency[r]
        if t == 0:
            zero.setdefault((j, k), []).append(r)
            continue
        config = tuple(sorted(users_ref[r].items()))
        grouped.setdefault(ClassKey(j, t, k, config), []).append(r)

    rows = {}
    for key, resources in grouped.items():
        log_t_cost = _log_load_cost(key.k, key.t)
        entries = []
        for i, alpha in key.config:
            log_lam = math.log(len(resources) * i * alpha) + key.k.log_eval(float(key.t)) - log_sc_ref
            entries.append(WeightEntry(i, alpha, math.exp(log_lam), load_term(key.k, key.j, key.t, i)))
        local = safe_exp(_log_load_cost(key.k, key.j) - log_t_cost) if key.j > 0 else 0.0
        rows[key] = ClassRow(key, resources, entries, local)

    lambda_zero = {}
    for (j, k), resources in zero.items():
        lam = math.exp(math.log(len(resources)) - log_sc_ref)
        f00 = safe_exp(_log_load_cost(k, j)) if j > 0 else 0.0
        lambda_zero[(j, k)] = ZeroRow(j, k, resources, lam, f00)

    table = ClassTable(rows, lambda_zero, safe_exp(log_sc_ref), safe_exp(log_sc_s), reference)
    if reference != "optimal":
        table.notes.append("reference state is not the exhaustive optimum; equilibrium mass bounds do not apply")
        logger.warning("Class table built against a non-optimal reference state")
    return table


def lambda_total(table: ClassTable) -> float:
    return sum(e.lam for row in table.rows.values() for e in row.entries)


def coordination_ratio_decomposed(table: ClassTable) -> float:
    """
    H(S) = sum lambda * (j/t) * (l(j)/l(t)) + sum lambda00 * j l(j); equals
    SC(S)/SC(S_ref) for any pair of states.
    """
    total = 0.0
    for row in table.rows.values():
        total += sum(e.lam for e in row.entries) * row.local_ratio
    for zero_row in table.lambda_zero.values():
        total += zero_row.lam * zero_row.f
    return total


def check_equilibrium_constraint(table: ClassTable) -> ConstraintCheck:
    """
    Overloaded mass (t = 0 classes plus f >= 0 entries) against underloaded mass (g > 0
    entries). Holds for every Nash state measured against the optimum.
    """
    lhs = sum(z.lam * z.f for z in table.lambda_zero.values())
    rhs = 0.0
    for row in table.rows.values():
        for e in row.entries:
            if e.side is Side.OVERLOADED:
                lhs += e.lam * e.f
            else:
                rhs += e.lam * e.g
    return ConstraintCheck(lhs, rhs, lhs <= rhs + EQ_REL_TOL * max(1.0, rhs))


def classify_triple_side(f_value: float, g_value: float) -> Side:
    """Overloaded iff f >= 0 (boundary f = 0 counts as overloaded)"""
    if f_value >= 0:
        return Side.OVERLOADED
    if not g_value > 0:
        raise ValueError(f"Exactly one of f >= 0 or g > 0 must hold (f={f_value}, g={g_value})")
    return Side.UNDERLOADED


def t_zero_mass(table: ClassTable) -> float:
    """sum lambda00 * f00, bounded by g_hat for equilibrium states"""
    return sum(z.lam * z.f for z in table.lambda_zero.values())


def underloaded_ratio_mass(table: ClassTable) -> float:
    """sum over underloaded entries of lambda * j l(j) / (t l(t)), bounded by g*"""
    return sum(
        e.lam * row.local_ratio
        for row in table.rows.values()
        for e in row.entries
        if e.side is Side.UNDERLOADED
    )


def triple_side_mismatches(table: ClassTable) -> List[Tuple[ClassKey, Fraction, float]]:
    """
    Entries whose side disagrees with the ordered triple at (t, i): overloaded should mean
    j >= x. Entries without a triple, or with j within root tolerance of x, are skipped.
    """
    from anarchia.bounds import NoTriple, find_triple

    mismatches = []
    for key, row in table.rows.items():
        for e in row.entries:
            triple = find_triple(key.k, float(key.t), float(e.i))
            if isinstance(triple, NoTriple):
                continue
            j = float(key.j)
            if abs(j - triple.x) <= TRIPLE_RESIDUAL_TOL * max(1.0, triple.x):
                continue
            expected = Side.OVERLOADED if j >= triple.x else Side.UNDERLOADED
            if expected is not e.side:
                mismatches.append((key, e.i, triple.x))
    return mismatches


def table_rows(table: ClassTable) -> Iterator[dict]:
    """Flat per-(class, weight) records for CSV output"""
    for key, row in table.rows.items():
        config = " ".join(f"{render_rational(w)}x{c}" for w, c in key.config)
        for e in row.entries:
            yield {
                "j": render_rational(key.j),
                "t": render_rational(key.t),
                "k": key.k.describe(),
                "config": config,
                "i": render_rational(e.i),
                "lambda": e.lam,
                "f": e.f,
                "g": e.g,
                "side": e.side.value,
                "resources": len(row.resources),
            }
    for (j, k), z in table.lambda_zero.items():
        yield {
            "j": render_rational(j),
            "t": "0/1",
            "k": k.describe(),
            "config": "",
            "i": "0/1",
            "lambda": z.lam,
            "f": z.f,
            "g": -z.f,
            "side": Side.OVERLOADED.value,
            "resources": len(z.resources),
        }
