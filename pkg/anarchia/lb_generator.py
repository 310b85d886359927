"""
Two-strategy cyclic lower-bound games.

Resources form two rings A (zeta1 resources) and B (zeta2 resources). Player i (1-based)
gets a first strategy of alpha consecutive A resources starting at (i-1) plus beta
consecutive B resources starting at (i-1), and a second strategy of gamma A resources and
delta B resources starting right after the first windows. With N = kappa1 zeta1 =
kappa2 zeta2 players every A resource carries kappa1 alpha players in the all-first state S
and kappa1 gamma in the all-second state Sbar; B likewise.
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, NamedTuple, Optional, Tuple

import numpy as np
from scipy.optimize import brentq
from scipy.special import logsumexp

from anarchia.constants import EQ_REL_TOL
from anarchia.errors import (
    DegenerateDenominator,
    DisjointnessViolated,
    InvalidParams,
    NoFeasibleParams,
    NotEquilibrium,
)
from anarchia.game import (
    Game,
    StateProfile,
    build_game,
    congestion,
    deviation_cost,
    is_nash,
    player_cost,
)
from anarchia.latency.base import LatencyFunction
from anarchia.utils import parse_weight, render_rational, worker_count

logger = logging.getLogger(__name__)

# relative gap under which two candidate ratios count as tied
RATIO_TIE_TOL = 1e-12
WEIGHT_DENOMINATOR_LIMIT = 10 ** 9
# weight tuning looks for cost ties in [w / WEIGHT_TUNE_FLOOR, WEIGHT_TUNE_SPAN * w]
WEIGHT_TUNE_FLOOR = 1024
WEIGHT_TUNE_SPAN = 64
WEIGHT_SCAN_POINTS = 48
TUNE_CANDIDATES = 8


@dataclass(frozen=True)
class LBParams:
    alpha: int
    beta: int
    gamma: int
    delta: int
    zeta1: int
    zeta2: int
    kappa1: int
    kappa2: int
    w: Fraction
    latency: LatencyFunction

    def __post_init__(self):
        object.__setattr__(self, "w", parse_weight(self.w))
        counts = (self.alpha, self.beta, self.gamma, self.delta)
        if any(c < 0 for c in counts):
            raise InvalidParams(f"alpha, beta, gamma, delta must be >= 0, got {counts}")
        if min(self.zeta1, self.zeta2, self.kappa1, self.kappa2) < 1:
            raise InvalidParams("zeta and kappa values must be positive")
        if self.zeta1 < self.alpha + self.gamma or self.zeta2 < self.beta + self.delta:
            raise InvalidParams(
                f"Windows do not fit: zeta1={self.zeta1} < alpha+gamma or zeta2={self.zeta2} < beta+delta"
            )
        if self.kappa1 * self.zeta1 != self.kappa2 * self.zeta2:
            raise InvalidParams(
                f"kappa1*zeta1={self.kappa1 * self.zeta1} differs from kappa2*zeta2={self.kappa2 * self.zeta2}"
            )
        if self.alpha + self.beta < 1 or self.gamma + self.delta < 1:
            raise InvalidParams("Both strategies need at least one resource")

    @property
    def n(self) -> int:
        return self.kappa1 * self.zeta1

    def key(self) -> Tuple[int, ...]:
        return (self.alpha, self.beta, self.gamma, self.delta,
                self.zeta1, self.zeta2, self.kappa1, self.kappa2)

    def with_weight(self, w) -> "LBParams":
        return LBParams(*self.key(), w=w, latency=self.latency)

    def to_dict(self) -> dict:
        names = ("alpha", "beta", "gamma", "delta", "zeta1", "zeta2", "kappa1", "kappa2")
        data = dict(zip(names, self.key()))
        data["w"] = render_rational(self.w)
        data["latency"] = self.latency.to_spec()
        return data


@dataclass
class LBInstance:
    params: LBParams
    game: Game
    state_s: StateProfile
    state_sbar: StateProfile
    j1: Fraction
    j2: Fraction
    t1: Fraction
    t2: Fraction
    lambda1: float
    lambda2: float


class NashVerdict(NamedTuple):
    holds: bool
    worst_slack: float
    witness: Optional[int]  # first player with an improving switch


def _windows(start: int, first: int, second: int, size: int) -> Tuple[List[int], List[int]]:
    s = [(start + m) % size for m in range(first)]
    sbar = [(start + first + m) % size for m in range(second)]
    return s, sbar


def _log_load_cost(f: LatencyFunction, count: int, load: Fraction) -> float:
    """ln(count * load * l(load)), -inf for empty terms"""
    if count == 0 or load == 0:
        return -math.inf
    return math.log(count) + math.log(load) + f.log_eval(float(load))


def build(params: LBParams) -> LBInstance:
    f = params.latency
    n = params.n
    resources_a = [f"a{k}" for k in range(params.zeta1)]
    resources_b = [f"b{k}" for k in range(params.zeta2)]
    strategies = []
    for player in range(n):
        a_s, a_sbar = _windows(player, params.alpha, params.gamma, params.zeta1)
        b_s, b_sbar = _windows(player, params.beta, params.delta, params.zeta2)
        s = {resources_a[k] for k in a_s} | {resources_b[k] for k in b_s}
        sbar = {resources_a[k] for k in a_sbar} | {resources_b[k] for k in b_sbar}
        if s & sbar:
            raise DisjointnessViolated(f"Player {player + 1} strategies share {sorted(s & sbar)}")
        if player == 0:
            logger.debug(
                f"Second windows start {params.alpha} after the first on A and {params.beta} on B"
            )
        strategies.append([sorted(s), sorted(sbar)])

    latency = {r: f for r in resources_a + resources_b}
    game = build_game([params.w] * n, strategies, latency, resources=resources_a + resources_b)

    w = params.w
    j1, t1 = params.kappa1 * params.alpha * w, params.kappa1 * params.gamma * w
    j2, t2 = params.kappa2 * params.beta * w, params.kappa2 * params.delta * w
    instance = LBInstance(params, game, StateProfile((0,) * n), StateProfile((1,) * n),
                          j1, j2, t1, t2, 0.0, 0.0)
    _check_congestion(instance)

    log_a = _log_load_cost(f, params.zeta1, t1)
    log_b = _log_load_cost(f, params.zeta2, t2)
    top = max(log_a, log_b)
    share_a, share_b = math.exp(log_a - top), math.exp(log_b - top)
    instance.lambda1 = share_a / (share_a + share_b)
    instance.lambda2 = share_b / (share_a + share_b)
    return instance


def _check_congestion(instance: LBInstance) -> None:
    p = instance.params
    n = p.n
    loads_s = congestion(instance.game, instance.state_s)
    loads_sbar = congestion(instance.game, instance.state_sbar)
    expected = {
        "a": (Fraction(n * p.alpha) * p.w / p.zeta1, Fraction(n * p.gamma) * p.w / p.zeta1),
        "b": (Fraction(n * p.beta) * p.w / p.zeta2, Fraction(n * p.delta) * p.w / p.zeta2),
    }
    for r in instance.game.resources:
        want_s, want_sbar = expected[r[0]]
        if loads_s[r] != want_s or loads_sbar[r] != want_sbar:
            raise AssertionError(
                f"Resource {r} carries {loads_s[r]}/{loads_sbar[r]}, expected {want_s}/{want_sbar}"
            )


def _latency_value(f: LatencyFunction, x: Fraction):
    exact = f.exact_eval(x)
    return exact if exact is not None else f.eval(float(x))


def strategy_costs(params: LBParams):
    """
    (alpha l(j1) + beta l(j2), gamma l(j1+w) + delta l(j2+w)): a player's cost in S and
    after switching alone. Exact Fractions when the latency allows it.
    """
    f, w = params.latency, params.w
    j1, j2 = params.kappa1 * params.alpha * w, params.kappa2 * params.beta * w
    stay = move = 0
    if params.alpha:
        stay += params.alpha * _latency_value(f, j1)
    if params.beta:
        stay += params.beta * _latency_value(f, j2)
    if params.gamma:
        move += params.gamma * _latency_value(f, j1 + w)
    if params.delta:
        move += params.delta * _latency_value(f, j2 + w)
    return stay, move


def cost_gap(params: LBParams):
    """Cost in S minus cost after switching; S is stable iff the gap is <= 0."""
    stay, move = strategy_costs(params)
    return stay - move


def _log_strategy_costs(params: LBParams) -> Tuple[float, float]:
    f, w = params.latency, params.w
    j1, j2 = params.kappa1 * params.alpha * w, params.kappa2 * params.beta * w

    def log_cost(terms):
        counts = [c for c, _ in terms if c]
        logs = [f.log_eval(float(x)) for c, x in terms if c]
        return float(logsumexp(logs, b=counts))

    stay = log_cost([(params.alpha, j1), (params.beta, j2)])
    move = log_cost([(params.gamma, j1 + w), (params.delta, j2 + w)])
    return stay, move


def _stable_by_costs(params: LBParams) -> bool:
    stay, move = strategy_costs(params)
    if isinstance(stay, Fraction) and isinstance(move, Fraction):
        return stay <= move
    if math.isinf(stay):
        log_stay, log_move = _log_strategy_costs(params)
        return not log_move < log_stay - math.log1p(EQ_REL_TOL)
    return not move < stay - EQ_REL_TOL * max(1.0, stay)


def verify_nash(instance: LBInstance) -> NashVerdict:
    """
    Check that S is an equilibrium twice, through the game model and through the closed
    cost comparison; the two must agree.
    """
    game = instance.game
    check = is_nash(game, instance.state_s)
    analytic = _stable_by_costs(instance.params)
    if check.holds != analytic:
        raise AssertionError(
            f"Equilibrium checks disagree for {instance.params.key()}: model={check.holds}, closed form={analytic}"
        )
    slack = min(
        deviation_cost(game, instance.state_s, p, 1) - player_cost(game, instance.state_s, p)
        for p in range(game.n_players)
    )
    return NashVerdict(check.holds, slack, None if check.holds else check.witness[0])


def _log_social_cost(instance: LBInstance, first: bool) -> float:
    p, f = instance.params, instance.params.latency
    a, b = (instance.j1, instance.j2) if first else (instance.t1, instance.t2)
    return float(np.logaddexp(_log_load_cost(f, p.zeta1, a), _log_load_cost(f, p.zeta2, b)))


def ratio_lower_bound(instance: LBInstance) -> float:
    """SC(S)/SC(Sbar), a lower bound on the price of anarchy once S is stable"""
    if not verify_nash(instance).holds:
        raise NotEquilibrium(f"State S of {instance.params.key()} is not a Nash equilibrium")
    return math.exp(_log_social_cost(instance, True) - _log_social_cost(instance, False))


def decomposed_ratio(instance: LBInstance) -> float:
    """lambda1 j1 l(j1)/(t1 l(t1)) + lambda2 j2 l(j2)/(t2 l(t2)) over the loaded rings"""
    f = instance.params.latency
    total = 0.0
    for lam, j, t in ((instance.lambda1, instance.j1, instance.t1), (instance.lambda2, instance.j2, instance.t2)):
        if t == 0 or j == 0:
            continue
        total += lam * math.exp(math.log(j / t) + f.log_ratio(float(j), float(t)))
    return total


def lambda_balance(instance: LBInstance) -> Tuple[float, float]:
    """
    (lambda1 [j1 l(j1)/(t1 l(t1)) - l(j1+w)/l(t1)], lambda2 [l(j2+w)/l(t2) - j2 l(j2)/(t2 l(t2))]);
    the two sides coincide when a player's two strategies cost the same.
    """
    f, w = instance.params.latency, instance.params.w

    def side(lam, j, t):
        if t == 0:
            return 0.0
        first = math.exp(math.log(j / t) + f.log_ratio(float(j), float(t))) if j > 0 else 0.0
        return lam * (first - math.exp(f.log_ratio(float(j + w), float(t))))

    return side(instance.lambda1, instance.j1, instance.t1), -side(instance.lambda2, instance.j2, instance.t2)


def balance_weight(params: LBParams, lo, hi) -> Fraction:
    """
    Weight w in [lo, hi] at which a player's two strategies cost the same, found by Brent's
    method on cost_gap and rounded to a rational with bounded denominator.
    """
    lo, hi = float(lo), float(hi)

    def gap(w):
        return float(cost_gap(params.with_weight(Fraction(w))))

    g_lo, g_hi = gap(lo), gap(hi)
    if g_lo == 0:
        return Fraction(lo).limit_denominator(WEIGHT_DENOMINATOR_LIMIT)
    if g_hi == 0:
        return Fraction(hi).limit_denominator(WEIGHT_DENOMINATOR_LIMIT)
    if g_lo * g_hi > 0:
        raise InvalidParams(f"Cost gap does not change sign on [{lo}, {hi}]")
    root = brentq(gap, lo, hi, xtol=1e-15, rtol=1e-14)
    w = Fraction(root).limit_denominator(WEIGHT_DENOMINATOR_LIMIT)
    logger.debug(f"Balanced weight {w} for {params.key()} (gap {gap(float(w)):.3g})")
    return w


def closed_form_bound(f: LatencyFunction, w, j1, t1, g_hat_value: float) -> float:
    """g j1 l(j1) / (g t1 l(t1) + j1 l(j1) - t1 l(j1+w)), g the g_hat of f"""
    w, j1, t1 = float(w), float(j1), float(t1)
    log_a = math.log(j1) + f.log_eval(j1)
    log_b = math.log(t1) + f.log_eval(t1)
    log_c = math.log(t1) + f.log_eval(j1 + w)
    denominator = g_hat_value * math.exp(log_b - log_a) - math.expm1(log_c - log_a)
    if denominator <= 0:
        raise DegenerateDenominator(f"Denominator {denominator:.3g} is not positive at j1={j1}, t1={t1}")
    return g_hat_value / denominator


def sidecar(instance: LBInstance, ratio: Optional[float] = None) -> Dict:
    return {
        "params": instance.params.to_dict(),
        "state_s": list(instance.state_s.choice),
        "state_sbar": list(instance.state_sbar.choice),
        "j1": render_rational(instance.j1),
        "j2": render_rational(instance.j2),
        "t1": render_rational(instance.t1),
        "t2": render_rational(instance.t2),
        "lambda1": instance.lambda1,
        "lambda2": instance.lambda2,
        "ratio": ratio,
    }


# Parameter search


class _Pairs(NamedTuple):
    counts: np.ndarray      # (first, second) window lengths per row
    gap: np.ndarray         # contribution to the stability inequality
    log_num: np.ndarray     # ln(zeta j l(j)) in S
    log_den: np.ndarray     # ln(zeta t l(t)) in Sbar


def _log_terms(f: LatencyFunction, zeta: int, loads: np.ndarray) -> np.ndarray:
    out = np.full(loads.shape, -np.inf)
    mask = loads > 0
    if np.any(mask):
        out[mask] = math.log(zeta) + np.log(loads[mask]) + f.log_eval(loads[mask])
    return out


def _values(f: LatencyFunction, counts: np.ndarray, loads: np.ndarray) -> np.ndarray:
    """counts * l(loads) with zero-count terms left at 0 so l is never taken at 0"""
    out = np.zeros(loads.shape)
    mask = counts > 0
    if np.any(mask):
        out[mask] = counts[mask] * f.eval(loads[mask])
    return out


def _ring_pairs(f: LatencyFunction, w: float, zeta: int, kappa: int, stable_side: bool) -> _Pairs:
    counts = np.array([(a, c) for a in range(zeta + 1) for c in range(zeta + 1 - a)], dtype=int)
    first, second = counts[:, 0], counts[:, 1]
    j = kappa * first * w
    t = kappa * second * w
    with np.errstate(invalid="ignore", over="ignore"):
        stay = _values(f, first, j)
        move = _values(f, second, j + w)
        # A side: alpha l(j1) - gamma l(j1+w); B side: delta l(j2+w) - beta l(j2)
        gap = stay - move if stable_side else move - stay
    return _Pairs(counts, gap, _log_terms(f, zeta, j), _log_terms(f, zeta, t))


def _best_in_block(f: LatencyFunction, w: float, n: int, zeta1: int, zeta2: int):
    kappa1, kappa2 = n // zeta1, n // zeta2
    a = _ring_pairs(f, w, zeta1, kappa1, True)
    b = _ring_pairs(f, w, zeta2, kappa2, False)
    with np.errstate(invalid="ignore"):
        scale = np.maximum(1.0, np.abs(a.gap)[:, None])
        feasible = a.gap[:, None] <= b.gap[None, :] + EQ_REL_TOL * scale
    non_empty = ((a.counts[:, 0][:, None] + b.counts[:, 0][None, :]) >= 1) & \
                ((a.counts[:, 1][:, None] + b.counts[:, 1][None, :]) >= 1)
    feasible &= non_empty
    if not np.any(feasible):
        return None
    with np.errstate(invalid="ignore"):
        log_ratio = np.logaddexp(a.log_num[:, None], b.log_num[None, :]) - \
            np.logaddexp(a.log_den[:, None], b.log_den[None, :])
    log_ratio = np.where(feasible & np.isfinite(log_ratio), log_ratio, -np.inf)
    top = float(log_ratio.max())
    if top == -np.inf:
        return None
    rows, cols = np.nonzero(log_ratio >= top - RATIO_TIE_TOL * max(1.0, abs(top)))
    keys = [
        (int(a.counts[r, 0]), int(b.counts[c, 0]), int(a.counts[r, 1]), int(b.counts[c, 1]),
         zeta1, zeta2, kappa1, kappa2)
        for r, c in zip(rows, cols)
    ]
    return top, min(keys)


def _search_n(args):
    f, w, n = args
    results = []
    divisors = [d for d in range(1, n + 1) if n % d == 0]
    for zeta1 in divisors:
        for zeta2 in divisors:
            found = _best_in_block(f, w, n, zeta1, zeta2)
            if found is not None:
                results.append(found)
    return results


def search_params(f: LatencyFunction, w, n_max: int, tune_weight: bool = False) -> Tuple[LBParams, float]:
    """
    Exhaustive scan of parameter tuples with N <= n_max whose all-first state is stable;
    returns the tuple with the largest SC(S)/SC(Sbar), lexicographically smallest
    (alpha, beta, gamma, delta, zeta1, zeta2, kappa1, kappa2) among ties. With tune_weight the
    leading TUNE_CANDIDATES stable tuples also try their cost-tie weights up to
    WEIGHT_TUNE_SPAN * w, which keeps the weights bounded independently of n_max.
    """
    if n_max < 1:
        raise InvalidParams(f"n_max must be positive, got {n_max}")
    w = parse_weight(w)
    jobs = [(f, float(w), n) for n in range(1, n_max + 1)]
    workers = worker_count()
    if workers > 1 and n_max > 8:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            blocks = list(pool.map(_search_n, jobs))
    else:
        blocks = [_search_n(job) for job in jobs]
    candidates = [c for block in blocks for c in block]
    if not candidates:
        raise NoFeasibleParams(f"No stable instance with N <= {n_max} for {f.describe()}")

    # best ratio first, smallest key among ties
    top = max(c[0] for c in candidates)
    tol = RATIO_TIE_TOL * max(1.0, abs(top))
    tied = sorted((c for c in candidates if c[0] >= top - tol), key=lambda c: c[1])
    rest = sorted((c for c in candidates if c[0] < top - tol), key=lambda c: (-c[0], c[1]))
    verified = []
    for _, key in tied + rest:
        params = LBParams(*key, w=w, latency=f)
        instance = build(params)
        if verify_nash(instance).holds:
            verified.append((params, ratio_lower_bound(instance)))
            if not tune_weight or len(verified) == TUNE_CANDIDATES:
                break
        else:
            logger.debug(f"Candidate {key} failed the model equilibrium check, trying the next one")
    if not verified:
        raise NoFeasibleParams(f"No candidate with N <= {n_max} passed the equilibrium check")
    params, ratio = verified[0]
    logger.info(f"Best instance for N <= {n_max}: {params.key()} with ratio {ratio:.6g}")
    if tune_weight:
        cap = w * WEIGHT_TUNE_SPAN
        for candidate, candidate_ratio in verified:
            tuned = _tuned(candidate, candidate_ratio, cap)
            if tuned[1] > ratio:
                params, ratio = tuned
    return params, ratio


def tie_weights(params: LBParams, lo, hi) -> List[Fraction]:
    """
    Every weight in [lo, hi] where the player's two strategies tie: the cost gap is scanned
    on a geometric grid and each sign change is handed to balance_weight.
    """
    grid = np.geomspace(float(lo), float(hi), WEIGHT_SCAN_POINTS)
    gaps = [float(cost_gap(params.with_weight(Fraction(float(x))))) for x in grid]
    roots = []
    for (a, gap_a), (b, gap_b) in zip(zip(grid, gaps), zip(grid[1:], gaps[1:])):
        if not (math.isfinite(gap_a) and math.isfinite(gap_b)) or gap_a * gap_b > 0:
            continue
        try:
            roots.append(balance_weight(params, a, b))
        except InvalidParams:
            continue
    return roots


def _tuned(params: LBParams, ratio: float, cap) -> Tuple[LBParams, float]:
    """
    Move w to the tie weight in (w / WEIGHT_TUNE_FLOOR, cap] with the largest ratio among
    those whose first state stays an equilibrium; keep w when none beats it.
    """
    best = (params, ratio)
    for w in tie_weights(params, params.w / WEIGHT_TUNE_FLOOR, cap):
        candidate = params.with_weight(w)
        instance = build(candidate)
        if not verify_nash(instance).holds:
            continue
        tuned_ratio = ratio_lower_bound(instance)
        if tuned_ratio > best[1]:
            best = (candidate, tuned_ratio)
    if best[0] is not params:
        logger.info(f"Weight {render_rational(best[0].w)} raises the ratio to {best[1]:.6g}")
    return best
