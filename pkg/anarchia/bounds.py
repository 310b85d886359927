"""
Upper-bound machinery for a single latency function: ordered triples, g*, g_hat and the
exact price-of-anarchy bound, plus scaling predictions per latency class.

Every maximization is deterministic: a log-spaced grid followed by bounded golden-section
refinement around the best cell. Values are kept in the log domain. Beyond the base range
the search walks DOUBLINGS bands [T, 2T]; a quantity is declared infinite when the band
maxima keep growing from one band to the next without their steps dying out.
"""

import functools
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from anarchia.constants import (
    BOUND_TOL,
    DEFAULT_GRID_POINTS,
    DEFAULT_REFINE_TOL,
    DEFAULT_T_MAX,
    DENOMINATOR_FLOOR,
    DOUBLINGS,
    GHAT_X_HIGH_FACTOR,
    GHAT_X_LOW_FACTOR,
    GROWTH_LOG_MARGIN,
    GROWTH_STEP_RATIO,
    GROWTH_PROBE,
    J_SPAN_FACTOR,
    REFINE_ROUNDS,
    TRIPLE_CACHE_SIZE,
    TRIPLE_REL_TOL,
    TRIPLE_SCAN_POINTS,
    X_CAP_FACTOR,
)
from anarchia.errors import DegenerateDenominator
from anarchia.latency.base import LatencyClass, LatencyFunction, log_grid
from anarchia.utils import render_real, safe_exp

logger = logging.getLogger(__name__)

# objective value handed to the line search where a point is infeasible
_PENALTY = 1e300


class OrderedTriple(NamedTuple):
    x: float
    y: float
    z: float
    residual: float

    def to_dict(self) -> dict:
        return {"x": self.x, "y": self.y, "z": self.z, "residual": self.residual}


class NoTriple(NamedTuple):
    t: float
    i: float


class Witness(NamedTuple):
    j: float
    t: float
    i: float


@dataclass
class SearchDomain:
    t_min: float
    t_max: float = DEFAULT_T_MAX
    i_values: List[float] = field(default_factory=list)
    grid_points: int = DEFAULT_GRID_POINTS
    refine_tol: float = DEFAULT_REFINE_TOL

    def __post_init__(self):
        if not self.t_min > 0:
            raise ValueError(f"t_min must be positive, got {self.t_min}")
        if not self.t_max > self.t_min:
            raise ValueError(f"t_max must exceed t_min, got [{self.t_min}, {self.t_max}]")
        if self.grid_points < 64:
            raise ValueError(f"grid_points must be at least 64, got {self.grid_points}")
        if not self.refine_tol > 0:
            raise ValueError("refine_tol must be positive")
        if any(not 0 < i < self.t_max for i in self.i_values):
            raise ValueError(f"i values must lie in (0, t_max), got {self.i_values}")

    @classmethod
    def for_weight(cls, w: float, i_values: Optional[Sequence[float]] = None, **kwargs) -> "SearchDomain":
        """Default domain for weight w: i ranges over i_values (default [w]), t from min(i)."""
        values = sorted(float(i) for i in (i_values or [w]))
        return cls(t_min=values[0], i_values=values, **kwargs)

    def checked_i_values(self, w: float) -> List[float]:
        values = self.i_values or [float(w)]
        if any(i > w * (1 + 1e-12) for i in values):
            raise ValueError(f"i values must not exceed w = {w}, got {values}")
        return values


@dataclass
class BoundValue:
    log_value: float
    witness: Optional[Witness] = None
    infinite: bool = False
    trace: List[Tuple[float, float]] = field(default_factory=list)

    @property
    def value(self) -> float:
        if self.infinite:
            return math.inf
        return safe_exp(self.log_value)

    @property
    def empty(self) -> bool:
        """No feasible point was found (e.g. no ordered triple anywhere)"""
        return not self.infinite and self.log_value == -math.inf


@dataclass
class BoundReport:
    family: dict
    w: float
    g_star: BoundValue
    g_hat: BoundValue
    poa_bound: BoundValue
    w_star: BoundValue
    triples_found: List[OrderedTriple]
    i_values: List[float]
    divergence_evidence: Optional[List[Tuple[float, float]]] = None
    notes: List[str] = field(default_factory=list)

    @property
    def verdict(self) -> str:
        return "infinite" if self.poa_bound.infinite else "finite"

    @property
    def additive_bound(self) -> float:
        parts = (self.g_hat, self.g_star, self.w_star)
        if any(p.infinite for p in parts):
            return math.inf
        return sum(p.value for p in parts)

    def nearest_achievable(self, t: float) -> float:
        """Closest positive multiple of the analysed weight to a congestion t"""
        return max(1, round(t / self.w)) * self.w

    def _witness_dict(self, bound: BoundValue) -> Optional[dict]:
        if bound.witness is None:
            return None
        j, t, i = bound.witness
        return {"j": j, "t": t, "i": i, "nearest_achievable_t": self.nearest_achievable(t)}

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "w": self.w,
            "i_values": self.i_values,
            "g_star": render_real(self.g_star.value),
            "g_hat": render_real(self.g_hat.value),
            "poa_bound": render_real(self.poa_bound.value),
            "additive_bound": render_real(self.additive_bound),
            "verdict": self.verdict,
            "witnesses": {
                "g_star": self._witness_dict(self.g_star),
                "g_hat": self._witness_dict(self.g_hat),
                "poa_bound": self._witness_dict(self.poa_bound),
            },
            "triples": [t.to_dict() for t in self.triples_found],
            "divergence_evidence": [
                {"t_max": hi, "log_value": render_real(v)} for hi, v in self.divergence_evidence
            ] if self.divergence_evidence else None,
            "notes": self.notes,
        }


class _Candidate(NamedTuple):
    log_value: float
    witness: Witness


# Ordered triples


def _triple_gap(f: LatencyFunction, t: float, i: float) -> Callable[[float], float]:
    """h(x) = ln x + ln l(x) - ln t - ln l(x+i); a root x >= t is an ordered triple"""
    log_t = math.log(t)

    def h(x: float) -> float:
        return math.log(x) + f.log_eval(x) - log_t - f.log_eval(x + i)

    return h


@functools.lru_cache(maxsize=TRIPLE_CACHE_SIZE)
def find_triple(f: LatencyFunction, t: float, i: float) -> Union[OrderedTriple, NoTriple]:
    """
    Smallest x >= t with x l(x) = t l(x+i), i.e. the ordered triple (x, t, i).
    Scans a log-spaced grid over [t, X_CAP_FACTOR * t] for a sign change of h and refines
    it with Brent's method. NoTriple when h stays negative over the whole scan.
    """
    if not t >= i > 0:
        raise ValueError(f"find_triple needs t >= i > 0, got t={t}, i={i}")
    if not math.isfinite(f.log_eval(t)):
        return NoTriple(t, i)
    h = _triple_gap(f, t, i)
    h_t = h(t)
    # flat stretch (constant latency): x = t already balances
    if h_t > -1e-14:
        return OrderedTriple(t, t, i, abs(h_t))

    xs = log_grid(t, X_CAP_FACTOR * t, TRIPLE_SCAN_POINTS)
    lx = np.log(xs)
    gaps = lx + f.log_eval(xs) - math.log(t) - f.log_eval(xs + i)
    crossings = np.nonzero(gaps >= 0)[0]
    if crossings.size == 0:
        return NoTriple(t, i)
    k = max(int(crossings[0]), 1)
    lo, hi = float(xs[k - 1]), float(xs[k])
    if h(hi) == 0.0:
        x = hi
    else:
        x = brentq(h, lo, hi, xtol=TRIPLE_REL_TOL * lo, rtol=TRIPLE_REL_TOL)
    return OrderedTriple(float(x), t, i, abs(h(x)))


def g_star_at(f: LatencyFunction, t: float, i: float) -> Optional[float]:
    """ln(l(x+i)/l(t)) at the triple for (t, i), None without a triple"""
    triple = find_triple(f, t, i)
    if isinstance(triple, NoTriple):
        return None
    return f.log_eval(triple.x + i) - f.log_eval(t)


# Shared search scaffolding


def _refine_line(objective: Callable[[float], float], lo: float, hi: float, tol: float) -> Tuple[float, float]:
    """Maximize objective(u) on [lo, hi] (u is a log coordinate); returns (u, value)"""
    if hi <= lo:
        return lo, objective(lo)

    def negated(u):
        value = objective(u)
        return -value if math.isfinite(value) else _PENALTY

    result = minimize_scalar(negated, bounds=(lo, hi), method="bounded", options={"xatol": tol})
    return float(result.x), objective(float(result.x))


def _bracket(grid: np.ndarray, k: int) -> Tuple[float, float]:
    return math.log(grid[max(k - 1, 0)]), math.log(grid[min(k + 1, len(grid) - 1)])


def _grows(values: Sequence[float]) -> bool:
    """
    Band maxima diverge when every band beats the previous one by more than
    GROWTH_LOG_MARGIN and the steps do not shrink faster than GROWTH_STEP_RATIO.
    A maximum creeping up to a finite limit halves its step per doubling.
    """
    if len(values) < 2 or not all(math.isfinite(v) for v in values):
        return False
    steps = [b - a for a, b in zip(values, values[1:])]
    if any(step <= GROWTH_LOG_MARGIN for step in steps):
        return False
    return all(b >= GROWTH_STEP_RATIO * a for a, b in zip(steps, steps[1:]))


def _band_search(evaluate: Callable[[float, float], Optional[_Candidate]], lo: float,
                 t_max: float, label: str) -> Tuple[Optional[_Candidate], List[Tuple[float, float]], bool]:
    """
    Evaluate [lo, t_max], then the bands [t_max 2^(k-1), t_max 2^k] for k = 1..DOUBLINGS.
    Returns the best candidate over everything evaluated, the (band end, band maximum)
    trace and whether the band maxima keep growing.
    """
    base = evaluate(lo, t_max)
    bands = []
    hi = t_max
    for _ in range(DOUBLINGS):
        band_lo, hi = hi, 2 * hi
        bands.append((hi, evaluate(band_lo, hi)))
    best = _best([base] + [candidate for _, candidate in bands])
    trace = [(end, candidate.log_value if candidate else -math.inf) for end, candidate in bands]
    growing = _grows([value for _, value in trace])
    if growing:
        logger.info(f"{label} grows band over band up to t={hi:g} (last log value {trace[-1][1]:.6g})")
    return best, trace, growing


def _best(candidates) -> Optional[_Candidate]:
    best = None
    for candidate in candidates:
        if candidate is not None and (best is None or candidate.log_value > best.log_value):
            best = candidate
    return best


def _to_bound(best: Optional[_Candidate], trace, infinite: bool) -> BoundValue:
    if infinite:
        return BoundValue(trace[-1][1], best.witness if best else None, True, trace)
    if best is None:
        return BoundValue(-math.inf, None, False, trace)
    return BoundValue(best.log_value, best.witness, False, trace)


# g*


def _g_star_region(f: LatencyFunction, i_values: Sequence[float], dom: SearchDomain,
                   lo: float, hi: float) -> Optional[_Candidate]:
    best = None
    for i in i_values:
        start = max(lo, i)
        if start >= hi:
            continue
        ts = log_grid(start, hi, dom.grid_points)
        values = [g_star_at(f, float(t), i) for t in ts]
        scored = [(v, k) for k, v in enumerate(values) if v is not None]
        if not scored:
            continue
        value, k = max(scored, key=lambda s: (s[0], -s[1]))

        def objective(u, i=i):
            v = g_star_at(f, math.exp(u), i)
            return -math.inf if v is None else v

        u, refined = _refine_line(objective, *_bracket(ts, k), dom.refine_tol)
        t = float(ts[k])
        if refined > value:
            value, t = refined, math.exp(u)
        triple = find_triple(f, t, i)
        candidate = _Candidate(value, Witness(triple.x, t, i))
        best = _best([best, candidate])
    return best


def g_star(f: LatencyFunction, w: float, dom: Optional[SearchDomain] = None) -> BoundValue:
    """
    g* = max over ordered triples (x, t, i) of l(x+i)/l(t), t scanning [t_min, t_max] and
    i the domain's i values. Empty when no triple exists anywhere.
    """
    dom = dom or SearchDomain.for_weight(w)
    i_values = dom.checked_i_values(w)
    best, trace, growing = _band_search(
        lambda lo, hi: _g_star_region(f, i_values, dom, lo, hi), dom.t_min, dom.t_max, "g*"
    )
    return _to_bound(best, trace, growing)


# g_hat


def _g_hat_log(f: LatencyFunction, x: float, y: float, z: float) -> float:
    """ln(l(x+z)/l(y) - x l(x)/(y l(y))), -inf where the difference is not positive"""
    ly = f.log_eval(y)
    a = f.log_eval(x + z) - ly
    b = math.log(x) + f.log_eval(x) - math.log(y) - ly
    if not a > b:
        return -math.inf
    return a + math.log(-math.expm1(b - a))


def _g_hat_region(f: LatencyFunction, i_values: Sequence[float], dom: SearchDomain,
                  lo: float, hi: float) -> Optional[_Candidate]:
    best = None
    for z in i_values:
        start = max(lo, z)
        if start >= hi:
            continue
        ys = log_grid(start, hi, dom.grid_points)
        ly = f.log_eval(ys)
        ys, ly = ys[np.isfinite(ly)], ly[np.isfinite(ly)]
        if ys.size == 0:
            continue
        xs = log_grid(GHAT_X_LOW_FACTOR * z, GHAT_X_HIGH_FACTOR * hi, 2 * dom.grid_points)
        with np.errstate(invalid="ignore", divide="ignore"):
            a = f.log_eval(xs + z)[None, :] - ly[:, None]
            b = (np.log(xs) + f.log_eval(xs))[None, :] - (np.log(ys) + ly)[:, None]
            log_g = np.where(a > b, a + np.log(-np.expm1(np.minimum(b - a, 0.0))), -np.inf)
        log_g = np.where(np.isnan(log_g), -np.inf, log_g)

        # x -> 0 leaves l(z)/l(y)
        edge = f.log_eval(z) - ly
        iy, ix = np.unravel_index(int(np.argmax(log_g)), log_g.shape)
        grid_value = float(log_g[iy, ix])
        edge_k = int(np.argmax(edge))
        if float(edge[edge_k]) >= grid_value:
            candidate = _Candidate(float(edge[edge_k]), Witness(0.0, float(ys[edge_k]), z))
            best = _best([best, candidate])
            continue

        x, y, value = float(xs[ix]), float(ys[iy]), grid_value
        x_lo, x_hi = _bracket(xs, ix)
        y_lo, y_hi = _bracket(ys, iy)
        for _ in range(REFINE_ROUNDS):
            before = value
            u, v = _refine_line(lambda u: _g_hat_log(f, math.exp(u), y, z), x_lo, x_hi, dom.refine_tol)
            if v > value:
                x, value = math.exp(u), v
            u, v = _refine_line(lambda u: _g_hat_log(f, x, math.exp(u), z), y_lo, y_hi, dom.refine_tol)
            if v > value:
                y, value = math.exp(u), v
            if value - before <= dom.refine_tol * max(1.0, abs(value)):
                break
        best = _best([best, _Candidate(value, Witness(x, y, z))])
    return best


def g_hat(f: LatencyFunction, w: float, dom: Optional[SearchDomain] = None) -> BoundValue:
    """
    g_hat = sup over x > 0, y >= z of l(x+z)/l(y) - x l(x)/(y l(y)), z over the domain's i
    values. The x -> 0 limit l(z)/l(y) is included, which makes constant latencies give 1.
    """
    dom = dom or SearchDomain.for_weight(w)
    i_values = dom.checked_i_values(w)
    best, trace, growing = _band_search(
        lambda lo, hi: _g_hat_region(f, i_values, dom, lo, hi), dom.t_min, dom.t_max, "g_hat"
    )
    return _to_bound(best, trace, growing)


# Upper-bound expression


def _w_log_values(f: LatencyFunction, js: np.ndarray, t: float, i: float, g_hat_value: float) -> np.ndarray:
    """
    ln of g l(j) j / (g t l(t) + j l(j) - t l(j+i)) written as g / (g B/A + 1 - C/A) with
    A = j l(j), B = t l(t), C = t l(j+i).
    """
    log_a = np.log(js) + f.log_eval(js)
    log_b = math.log(t) + f.log_eval(t)
    log_c = math.log(t) + f.log_eval(js + i)
    denominator = g_hat_value * np.exp(log_b - log_a) - np.expm1(log_c - log_a)
    bad = denominator < DENOMINATOR_FLOOR * g_hat_value
    if np.any(bad):
        j = float(np.asarray(js)[np.argmax(bad)])
        raise DegenerateDenominator(
            f"Bound denominator {float(np.min(denominator)):.3g} collapsed at j={j:.6g}, t={t:.6g}, i={i:.6g}"
        )
    return math.log(g_hat_value) - np.log(denominator)


def _w_star_at(f: LatencyFunction, t: float, i: float, g_hat_value: float,
               dom: SearchDomain, refine: bool = False) -> Optional[_Candidate]:
    triple = find_triple(f, t, i)
    if isinstance(triple, NoTriple):
        return None
    js = log_grid(triple.x, J_SPAN_FACTOR * triple.x, dom.grid_points)
    values = _w_log_values(f, js, t, i, g_hat_value)
    k = int(np.argmax(values))
    j, value = float(js[k]), float(values[k])
    if not refine:
        return _Candidate(value, Witness(j, t, i))

    def objective(u):
        return float(_w_log_values(f, np.array([math.exp(u)]), t, i, g_hat_value)[0])

    u, refined = _refine_line(objective, *_bracket(js, k), dom.refine_tol)
    if refined > value:
        j, value = math.exp(u), refined
    return _Candidate(value, Witness(j, t, i))


def _w_star_region(f: LatencyFunction, i_values: Sequence[float], g_hat_value: float,
                   dom: SearchDomain, lo: float, hi: float) -> Optional[_Candidate]:
    """Coarse t grid, a second grid across the best cell, then one refined j search"""
    best = None
    for i in i_values:
        start = max(lo, i)
        if start >= hi:
            continue
        ts = log_grid(start, hi, dom.grid_points)
        coarse = _best(_w_star_at(f, float(t), i, g_hat_value, dom) for t in ts)
        if coarse is None:
            continue
        k = int(np.argmin(np.abs(ts - coarse.witness.t)))
        u_lo, u_hi = _bracket(ts, k)
        fine = np.clip(np.exp(np.linspace(u_lo, u_hi, dom.grid_points)),
                       ts[max(k - 1, 0)], ts[min(k + 1, len(ts) - 1)])
        region_best = _best([coarse] + [_w_star_at(f, float(t), i, g_hat_value, dom) for t in fine])
        refined = _w_star_at(f, region_best.witness.t, i, g_hat_value, dom, refine=True)
        best = _best([best, region_best, refined])
    return best


def w_star(f: LatencyFunction, w: float, g_hat_value: float, dom: Optional[SearchDomain] = None) -> BoundValue:
    """Max over (t, i) and j >= x(t, i) of the bound expression, for a finite g_hat"""
    dom = dom or SearchDomain.for_weight(w)
    i_values = dom.checked_i_values(w)
    best, trace, growing = _band_search(
        lambda lo, hi: _w_star_region(f, i_values, g_hat_value, dom, lo, hi), dom.t_min, dom.t_max, "bound"
    )
    return _to_bound(best, trace, growing)


# Reports


def _sample_triples(f: LatencyFunction, i_values: Sequence[float], dom: SearchDomain,
                    extra: Sequence[Optional[Witness]]) -> List[OrderedTriple]:
    points = [(max(dom.t_min, i), i) for i in i_values]
    points += [(wit.t, wit.i) for wit in extra if wit is not None and wit.t >= wit.i]
    triples = []
    for t, i in points:
        triple = find_triple(f, t, i)
        if isinstance(triple, OrderedTriple) and triple not in triples:
            triples.append(triple)
    return triples


def analyze(f: LatencyFunction, w: float, dom: Optional[SearchDomain] = None) -> BoundReport:
    """Full bound report for latency f and maximum weight w"""
    w = float(w)
    dom = dom or SearchDomain.for_weight(w)
    i_values = dom.checked_i_values(w)
    notes = [f"z ranges over i values {i_values}; g_hat takes y >= z"]

    hat = g_hat(f, w, dom)
    star = g_star(f, w, dom)
    if star.empty:
        notes.append("no ordered triple in the search domain")
        if hat.infinite:
            star = BoundValue(hat.log_value, None, True, hat.trace)

    if hat.infinite or star.infinite:
        w_part = BoundValue(math.inf, None, True)
        source = hat if hat.infinite else star
        poa = BoundValue(source.log_value, source.witness, True, source.trace)
    elif star.empty:
        w_part = BoundValue(-math.inf)
        poa = BoundValue(hat.log_value, hat.witness, False, hat.trace)
        notes.append("bound falls back to g_hat")
    else:
        w_part = w_star(f, w, hat.value, dom)
        if w_part.infinite:
            poa = BoundValue(w_part.log_value, w_part.witness, True, w_part.trace)
        elif w_part.log_value > star.log_value:
            poa = BoundValue(w_part.log_value, w_part.witness, False, w_part.trace)
        else:
            poa = BoundValue(star.log_value, star.witness, False, star.trace)

    if not (hat.infinite or star.infinite or star.empty) and hat.log_value > star.log_value + BOUND_TOL:
        logger.warning(f"g_hat {hat.value:.6g} exceeds g* {star.value:.6g} for {f.describe()}")

    report = BoundReport(
        family=f.to_spec(),
        w=w,
        g_star=star,
        g_hat=hat,
        poa_bound=poa,
        w_star=w_part,
        triples_found=_sample_triples(f, i_values, dom, [star.witness, poa.witness]),
        i_values=list(i_values),
        divergence_evidence=poa.trace if poa.infinite else None,
        notes=notes,
    )
    logger.info(f"Bound for {f.describe()} at w={w:g}: {report.verdict}, poa_bound={poa.value:.6g}")
    return report


def poa_bound(f: LatencyFunction, w: float, dom: Optional[SearchDomain] = None) -> BoundValue:
    return analyze(f, w, dom).poa_bound


@functools.lru_cache(maxsize=256)
def function_report(f: LatencyFunction, weights: Tuple[float, ...]) -> BoundReport:
    """Report for f with w = max(weights) and i over weights; cached across games"""
    dom = SearchDomain.for_weight(max(weights), i_values=weights)
    return analyze(f, max(weights), dom)


def game_reports(game, weights: Optional[Sequence[float]] = None) -> List[BoundReport]:
    """
    Reports for every latency of the game. weights defaults to the game's own player
    weights; a superset only widens the i range and raises w, so the bounds stay valid.
    """
    weights = tuple(sorted(float(w) for w in (weights if weights is not None else game.distinct_weights())))
    return [function_report(f, weights) for f in game.distinct_latencies()]


def game_bound(game) -> float:
    """Largest poa_bound over the game's latencies with i over the game's player weights"""
    return max(report.poa_bound.value for report in game_reports(game))


def predict_scaling(f: LatencyFunction, w: float, t_values: Sequence[float]) -> List[Tuple[float, float]]:
    """
    Predicted PoA lower bound as a function of the congestion scale t.
    L1: (1+d)^(d t/i + 1), d the limiting growth l(T+i)/l(T) - 1 sampled at large T.
    L2: (1+eps) ln^eps t.
    L3: the constant poa_bound.
    """
    i = float(w)
    if f.class_tag is LatencyClass.L1:
        delta = math.expm1(float(f.log_ratio(GROWTH_PROBE + i, GROWTH_PROBE)))
        log_base = math.log1p(delta)
        return [(t, safe_exp((delta * t / i + 1) * log_base)) for t in t_values]
    if f.class_tag is LatencyClass.L2:
        eps = f.epsilon
        return [(t, (1 + eps) * max(math.log(t), 0.0) ** eps) for t in t_values]
    bound = poa_bound(f, w).value
    return [(t, bound) for t in t_values]
