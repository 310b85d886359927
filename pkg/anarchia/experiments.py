"""
Experiment drivers behind the sweep and verify commands.

run_sweep searches the best lower-bound instance for every player budget n of a config and
reports it next to the predicted and the upper bound. run_verify_suite runs the property
checks over a fixed corpus directory plus seeded random games and writes a reproduction
file for every failure.
"""

import csv
import json
import logging
import os
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, TextIO

from anarchia import bounds, decomposition, lb_generator
from anarchia.constants import BOUND_TOL, DEFAULT_GRID_POINTS, DEFAULT_T_MAX
from anarchia.corpus import random_game, random_state, write_game
from anarchia.equilibrium import enumerate_nash, price_of_anarchy
from anarchia.errors import AnarchiaError, DegenerateDenominator, GameFormatError, NoEquilibrium
from anarchia.game import Game, load_game, social_cost
from anarchia.latency.base import LatencyFunction
from anarchia.registry import LatencyRegistry
from anarchia.utils import format_csv_real, parse_weight, render_rational

logger = logging.getLogger(__name__)

SWEEP_HEADER = ["n", "best_ratio", "predicted_lb", "poa_bound", "params"]
ENUMERATION_MAX_PLAYERS = 10
GENERATOR_MAX_PLAYERS = 8
DEFAULT_REPRO_DIR = "repro"


@dataclass
class SweepConfig:
    latency: LatencyFunction
    w: Fraction
    n_values: List[int]
    budget: int
    out: Optional[str] = None
    t_max: float = DEFAULT_T_MAX
    grid: int = DEFAULT_GRID_POINTS
    tune_weight: bool = False

    def __post_init__(self):
        if not self.n_values:
            raise GameFormatError("Sweep needs at least one n value")
        if any(b <= a for a, b in zip(self.n_values, self.n_values[1:])):
            raise GameFormatError(f"n_values must be strictly increasing, got {self.n_values}")
        if self.n_values[0] < 1:
            raise GameFormatError("n_values must be positive")
        if self.budget < self.n_values[-1]:
            raise GameFormatError(f"Search budget {self.budget} is below max n {self.n_values[-1]}")

    @classmethod
    def from_dict(cls, data: dict) -> "SweepConfig":
        try:
            n_values = [int(n) for n in data["n_values"]]
            return cls(
                latency=LatencyRegistry.from_spec(data["latency"]),
                w=parse_weight(data.get("w", 1)),
                n_values=n_values,
                budget=int(data.get("n_max", n_values[-1] if n_values else 0)),
                out=data.get("out"),
                t_max=float(data.get("t_max", DEFAULT_T_MAX)),
                grid=int(data.get("grid", DEFAULT_GRID_POINTS)),
                tune_weight=bool(data.get("tune_weight", False)),
            )
        except GameFormatError:
            raise
        except (KeyError, TypeError, ValueError) as e:
            raise GameFormatError(f"Invalid sweep config: {e}")

    @classmethod
    def load(cls, path) -> "SweepConfig":
        try:
            with open(path, "r", encoding="utf-8") as handle:
                data = json.load(handle)
        except (OSError, json.JSONDecodeError) as e:
            raise GameFormatError(f"Cannot read sweep config {path}: {e}")
        return cls.from_dict(data)


@dataclass
class SweepRow:
    n: int
    best_ratio: float
    predicted_lb: float
    poa_bound: float
    params: lb_generator.LBParams

    def params_summary(self) -> str:
        p = self.params
        return (
            f"alpha={p.alpha};beta={p.beta};gamma={p.gamma};delta={p.delta};"
            f"zeta1={p.zeta1};zeta2={p.zeta2};kappa1={p.kappa1};kappa2={p.kappa2};w={render_rational(p.w)}"
        )

    def to_csv(self) -> List[str]:
        return [
            str(self.n),
            format_csv_real(self.best_ratio),
            format_csv_real(self.predicted_lb),
            format_csv_real(self.poa_bound),
            self.params_summary(),
        ]


def _predicted_lb(f: LatencyFunction, w: Fraction, report: bounds.BoundReport,
                  instance: lb_generator.LBInstance) -> float:
    """Closed-form value at the instance's (j1, t1) when it is defined, else the class prediction"""
    if not report.g_hat.infinite and instance.j1 > 0 and instance.t1 > 0:
        try:
            return lb_generator.closed_form_bound(f, w, instance.j1, instance.t1, report.g_hat.value)
        except DegenerateDenominator:
            pass
    scale = float(max(instance.t1, instance.t2))
    return bounds.predict_scaling(f, float(w), [scale])[0][1]


def run_sweep(config: SweepConfig) -> List[SweepRow]:
    f, w = config.latency, config.w
    dom = bounds.SearchDomain.for_weight(float(w), t_max=config.t_max, grid_points=config.grid)
    report = bounds.analyze(f, float(w), dom)
    rows = []
    best = None
    for n in config.n_values:
        params, ratio = lb_generator.search_params(f, w, n, tune_weight=config.tune_weight)
        # a tuned instance from a smaller budget still fits this one
        if best is not None and best[1] > ratio:
            params, ratio = best
        best = (params, ratio)
        instance = lb_generator.build(params)
        row = SweepRow(n, ratio, _predicted_lb(f, w, report, instance), report.poa_bound.value, params)
        logger.info(f"Sweep n={n}: best ratio {ratio:.6g} with {params.key()}")
        rows.append(row)
    return rows


def write_sweep_csv(rows: List[SweepRow], handle: TextIO) -> None:
    writer = csv.writer(handle, lineterminator="\n")
    writer.writerow(SWEEP_HEADER)
    for row in rows:
        writer.writerow(row.to_csv())


# Property suite


@dataclass
class CheckTally:
    passed: int = 0
    failed: int = 0


@dataclass
class VerifySummary:
    seed: int
    count: int
    corpus_files: List[str] = field(default_factory=list)
    checks: Dict[str, CheckTally] = field(default_factory=dict)
    skipped_no_equilibrium: int = 0
    failures: List[dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def record(self, check: str, passed: bool) -> bool:
        tally = self.checks.setdefault(check, CheckTally())
        if passed:
            tally.passed += 1
        else:
            tally.failed += 1
        return passed

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "count": self.count,
            "corpus_files": self.corpus_files,
            "checks": {
                name: {"passed": t.passed, "failed": t.failed} for name, t in sorted(self.checks.items())
            },
            "skipped_no_equilibrium": self.skipped_no_equilibrium,
            "failures": self.failures,
            "status": "pass" if self.ok else "fail",
        }


def _relative_gap(a: float, b: float) -> float:
    return abs(a - b) / max(1.0, abs(b))


class _Suite:
    def __init__(self, summary: VerifySummary, repro_dir: Optional[str]):
        self.summary = summary
        self.repro_dir = repro_dir

    def fail(self, check: str, source: str, game: Optional[Game], detail: str) -> None:
        entry = {"check": check, "source": source, "detail": detail}
        if game is not None and self.repro_dir:
            name = f"{check}-{len(self.summary.failures)}"
            entry["reproduction"] = write_game(game, self.repro_dir, name, {"check": check, "detail": detail})
        logger.error(f"Property {check} failed on {source}: {detail}")
        self.summary.failures.append(entry)

    def check(self, name: str, passed: bool, source: str, game: Optional[Game], detail: str) -> None:
        if not self.summary.record(name, passed):
            self.fail(name, source, game, detail)

    def guarded(self, name: str, source: str, game: Optional[Game], step, *args) -> None:
        """Run one property step; an analysis error inside it fails check name"""
        try:
            step(*args)
        except AnarchiaError as e:
            self.check(name, False, source, game, f"{type(e).__name__}: {e}")

    def decomposition_identity(self, game: Game, rng: random.Random, source: str) -> None:
        state_s, state_ref = random_state(rng, game), random_state(rng, game)
        table = decomposition.build_classes(game, state_s, state_ref, reference="arbitrary")
        direct = social_cost(game, state_s) / social_cost(game, state_ref)
        decomposed = decomposition.coordination_ratio_decomposed(table)
        self.check("ratio_identity", _relative_gap(decomposed, direct) <= 1e-9, source, game,
                   f"decomposed {decomposed!r} vs direct {direct!r}")
        if table.rows:
            total = decomposition.lambda_total(table)
            self.check("lambda_normalization", abs(total - 1.0) <= 1e-12, source, game,
                       f"lambda sum {total!r}")

    def equilibrium_properties(self, game: Game, source: str, weights: Sequence[float]) -> None:
        try:
            report = price_of_anarchy(game)
        except NoEquilibrium:
            self.summary.skipped_no_equilibrium += 1
            return
        reports = bounds.game_reports(game, weights)
        g_hat = max(r.g_hat.value for r in reports)
        g_star = max(r.g_star.value for r in reports)
        limit = max(r.poa_bound.value for r in reports)
        self.check("upper_bound_soundness", report.poa <= limit + BOUND_TOL, source, game,
                   f"poa {report.poa!r} above bound {limit!r}")
        for state in report.nash_states:
            table = decomposition.build_classes(game, state, report.optimal_state)
            constraint = decomposition.check_equilibrium_constraint(table)
            self.check("equilibrium_constraint", constraint.holds, source, game,
                       f"state {list(state.choice)}: lhs {constraint.lhs!r} > rhs {constraint.rhs!r}")
            mass = decomposition.t_zero_mass(table)
            self.check("zero_load_mass", mass <= g_hat + BOUND_TOL * max(1.0, g_hat), source, game,
                       f"state {list(state.choice)}: mass {mass!r} above g_hat {g_hat!r}")
            under = decomposition.underloaded_ratio_mass(table)
            self.check("underloaded_mass", under <= g_star + BOUND_TOL * max(1.0, g_star), source, game,
                       f"state {list(state.choice)}: mass {under!r} above g* {g_star!r}")
            mismatches = decomposition.triple_side_mismatches(table)
            self.check("triple_side", not mismatches, source, game,
                       f"state {list(state.choice)}: {len(mismatches)} classes disagree with their triple")

    def generator_properties(self, params: lb_generator.LBParams, source: str) -> None:
        instance = lb_generator.build(params)
        try:
            verdict = lb_generator.verify_nash(instance)
        except AssertionError as e:
            self.check("generator_agreement", False, source, instance.game, str(e))
            return
        self.summary.record("generator_agreement", True)
        if params.n <= ENUMERATION_MAX_PLAYERS:
            listed = instance.state_s in enumerate_nash(instance.game)
            self.check("generator_enumeration", listed == verdict.holds, source, instance.game,
                       f"{params.key()}: verify_nash {verdict.holds}, enumeration {listed}")
        stay, move = lb_generator.strategy_costs(params)
        if stay == move and instance.t1 > 0 and instance.t2 > 0:
            left, right = lb_generator.lambda_balance(instance)
            self.check("lambda_balance", _relative_gap(left, right) <= 1e-9, source, instance.game,
                       f"{params.key()}: {left!r} vs {right!r}")
        if verdict.holds:
            ratio = lb_generator.ratio_lower_bound(instance)
            direct = social_cost(instance.game, instance.state_s) / social_cost(instance.game, instance.state_sbar)
            self.check("generator_ratio", _relative_gap(ratio, direct) <= 1e-9, source, instance.game,
                       f"{params.key()}: ratio {ratio!r} vs direct {direct!r}")


def random_params(rng: random.Random, latency: LatencyFunction, max_players: int = GENERATOR_MAX_PLAYERS):
    """Random valid lower-bound parameters with at most max_players players"""
    while True:
        n = rng.randint(1, max_players)
        divisors = [d for d in range(1, n + 1) if n % d == 0]
        zeta1, zeta2 = rng.choice(divisors), rng.choice(divisors)
        alpha = rng.randint(0, zeta1)
        gamma = rng.randint(0, zeta1 - alpha)
        beta = rng.randint(0, zeta2)
        delta = rng.randint(0, zeta2 - beta)
        if alpha + beta >= 1 and gamma + delta >= 1:
            return lb_generator.LBParams(alpha, beta, gamma, delta, zeta1, zeta2,
                                         n // zeta1, n // zeta2, 1, latency)


def load_corpus(corpus_dir: Optional[str]) -> List[tuple]:
    if not corpus_dir:
        return []
    if not os.path.isdir(corpus_dir):
        raise GameFormatError(f"Corpus directory {corpus_dir} does not exist")
    games = []
    for name in sorted(os.listdir(corpus_dir)):
        if name.endswith(".json"):
            games.append((name, load_game(os.path.join(corpus_dir, name))))
    return games


def default_repro_dir(out: Optional[str] = None) -> str:
    return out or os.getenv("ANARCHIA_REPRO_DIR") or DEFAULT_REPRO_DIR


def run_verify_suite(corpus_dir: Optional[str], seed: int, count: int,
                     repro_dir: Optional[str] = None) -> VerifySummary:
    """
    Property suite over the corpus directory plus count seeded random games and
    count // 10 random generator instances. Bounds are analysed once per latency with i
    over every weight seen in the run. Failures land in repro_dir, which defaults to
    ANARCHIA_REPRO_DIR and then ./repro.
    """
    summary = VerifySummary(seed=seed, count=count)
    suite = _Suite(summary, default_repro_dir(repro_dir))
    corpus = load_corpus(corpus_dir)
    summary.corpus_files = [name for name, _ in corpus]
    rng = random.Random(seed)

    sources = [(name, game) for name, game in corpus]
    sources += [(f"random-{k}", random_game(rng)) for k in range(count)]
    weights = sorted({float(w) for _, game in sources for w in game.distinct_weights()})
    for source, game in sources:
        suite.guarded("ratio_identity", source, game, suite.decomposition_identity, game, rng, source)
        suite.guarded("upper_bound_soundness", source, game,
                      suite.equilibrium_properties, game, source, weights)

    latencies = sorted({f for _, game in sources for f in game.distinct_latencies()}, key=lambda f: f.describe())
    if latencies:
        for k in range(max(1, count // 10)):
            latency = latencies[rng.randrange(len(latencies))]
            params = random_params(rng, latency)
            suite.guarded("generator_agreement", f"generator-{k}", None, suite.generator_properties,
                          params, f"generator-{k}")

    logger.info(
        f"Verify suite: {len(sources)} games, {sum(t.passed for t in summary.checks.values())} checks passed, "
        f"{len(summary.failures)} failed"
    )
    return summary
