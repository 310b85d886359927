import math
import random
from fractions import Fraction

import pytest

from anarchia.corpus import random_game, random_state
from anarchia.decomposition import (
    Side,
    build_classes,
    check_equilibrium_constraint,
    classify_triple_side,
    coordination_ratio_decomposed,
    lambda_total,
    load_term,
    t_zero_mass,
    table_rows,
    triple_side_mismatches,
    underloaded_ratio_mass,
)
from anarchia.equilibrium import price_of_anarchy
from anarchia.errors import NoEquilibrium, RefCostZero
from anarchia.game import StateProfile, build_game, social_cost
from anarchia.registry import LatencyRegistry


def test_identical_states(two_links):
    split = StateProfile((0, 1))
    table = build_classes(two_links, split, split)
    assert all(key.j == key.t for key in table.rows)
    assert lambda_total(table) == pytest.approx(1.0, abs=1e-12)
    assert coordination_ratio_decomposed(table) == pytest.approx(1.0, abs=1e-12)


def test_split_against_split_is_one_class(two_links, linear):
    split = StateProfile((0, 1))
    table = build_classes(two_links, split, split)
    assert len(table.rows) == 1
    (key, row), = table.rows.items()
    assert (key.j, key.t, key.k) == (Fraction(1), Fraction(1), linear)
    assert key.config == ((Fraction(1), 1),)
    assert sorted(row.resources) == ["e1", "e2"]
    # 1/2 per resource, two resources in the class
    assert row.entries[0].lam == pytest.approx(1.0)
    assert table.sc_opt == pytest.approx(2.0)
    assert not table.lambda_zero


def test_crowded_state_against_split(two_links):
    table = build_classes(two_links, StateProfile((0, 0)), StateProfile((0, 1)))
    by_load = {key.j: row for key, row in table.rows.items()}
    assert by_load[Fraction(2)].entries[0].f == pytest.approx(1.0)
    assert by_load[Fraction(2)].entries[0].side is Side.OVERLOADED
    assert by_load[Fraction(0)].entries[0].g == pytest.approx(1.0)
    assert by_load[Fraction(0)].entries[0].side is Side.UNDERLOADED
    assert coordination_ratio_decomposed(table) == pytest.approx(2.0)
    check = check_equilibrium_constraint(table)
    assert check.lhs == pytest.approx(0.5)
    assert check.rhs == pytest.approx(0.5)
    assert check.holds


def test_resource_idle_in_reference(linear):
    game = build_game([1], [[["e1"], ["e2"]]], {"e1": linear, "e2": linear})
    table = build_classes(game, StateProfile((1,)), StateProfile((0,)))
    zero = table.lambda_zero[(Fraction(1), linear)]
    assert zero.resources == ["e2"]
    assert zero.lam == pytest.approx(1.0 / table.sc_opt)
    assert zero.f == pytest.approx(1.0)
    assert t_zero_mass(table) == pytest.approx(1.0)
    assert coordination_ratio_decomposed(table) == pytest.approx(1.0)


def test_load_terms(linear):
    assert load_term(linear, Fraction(3), Fraction(1), Fraction(1)) == pytest.approx(5.0)
    assert load_term(linear, Fraction(1), Fraction(1), Fraction(1)) == pytest.approx(-1.0)
    assert classify_triple_side(5.0, -5.0) is Side.OVERLOADED
    assert classify_triple_side(-1.0, 1.0) is Side.UNDERLOADED
    assert classify_triple_side(0.0, 0.0) is Side.OVERLOADED


def test_zero_reference_cost_rejected():
    # x^2 (1 + ln x) vanishes at x = 1/4
    f = LatencyRegistry.build("poly_log_product", [[0, 0, 1], [1, 1]])
    game = build_game(["1/4"], [[["r"]]], {"r": f})
    with pytest.raises(RefCostZero):
        build_classes(game, StateProfile((0,)), StateProfile((0,)))


def test_non_optimal_reference_is_labelled(two_links):
    table = build_classes(two_links, StateProfile((0, 1)), StateProfile((0, 0)), reference="arbitrary")
    assert table.reference == "arbitrary"
    assert table.notes


def test_ratio_identity_on_random_pairs():
    rng = random.Random(11)
    for _ in range(200):
        game = random_game(rng)
        s, ref = random_state(rng, game), random_state(rng, game)
        table = build_classes(game, s, ref, reference="arbitrary")
        direct = social_cost(game, s) / social_cost(game, ref)
        assert coordination_ratio_decomposed(table) == pytest.approx(direct, rel=1e-9)
        if table.rows:
            assert lambda_total(table) == pytest.approx(1.0, abs=1e-12)


def test_equilibrium_states_against_optimum():
    rng = random.Random(5)
    checked = 0
    for _ in range(150):
        game = random_game(rng)
        try:
            report = price_of_anarchy(game)
        except NoEquilibrium:
            continue
        for state in report.nash_states:
            table = build_classes(game, state, report.optimal_state)
            assert check_equilibrium_constraint(table).holds
            assert not triple_side_mismatches(table)
            assert math.isfinite(underloaded_ratio_mass(table))
            checked += 1
    assert checked > 50


def test_table_rows(two_links):
    rows = list(table_rows(build_classes(two_links, StateProfile((0, 0)), StateProfile((0, 1)))))
    assert {row["side"] for row in rows} == {"overloaded", "underloaded"}
    assert {row["t"] for row in rows} == {"1/1"}
    assert all(row["config"] == "1/1x1" for row in rows)
