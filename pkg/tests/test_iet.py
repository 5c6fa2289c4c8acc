import itertools
from fractions import Fraction

import pytest
import sympy
from sympy.ntheory.continued_fraction import continued_fraction_iterator

from isometry_systems.core.errors import InvalidIET, KeaneViolation
from isometry_systems.core.forest import subtree_diameter
from isometry_systems.core.iet import (
    IntervalExchange,
    compare_inductions,
    golden_iet,
    iet_to_system,
    keane_check,
    rauzy_sequence,
    rauzy_step,
)
from isometry_systems.core.induction import run_induction
from isometry_systems.core.scalar import ONE, golden_ratio, sqrt


def three_iet(labels=None):
    lengths = [Fraction(1, 2), Fraction(1, 3), Fraction(1, 6) + sqrt(2) / 100]
    return IntervalExchange.from_permutation(lengths, [3, 2, 1], labels)


def rational_swap():
    return IntervalExchange.from_permutation([Fraction(1, 3), Fraction(2, 3)], [2, 1])


# --- Exchanges and systems ---


@pytest.mark.parametrize(
    "lengths, permutation, labels",
    [
        pytest.param([1, 2], [1, 1], None, id="not-a-permutation"),
        pytest.param([1, -2], [2, 1], None, id="negative-length"),
        pytest.param([1, 0], [2, 1], None, id="zero-length"),
        pytest.param([1, 2], [2, 1], ["a"], id="missing-label"),
        pytest.param([1, 2, 3], [2, 1], None, id="short-permutation"),
    ],
)
def test_rejects_malformed_exchanges(lengths, permutation, labels):
    with pytest.raises(InvalidIET):
        IntervalExchange.from_permutation(lengths, permutation, labels)


def test_exchange_basics():
    e = golden_iet()
    phi = golden_ratio()
    assert e.top == ("a", "b")
    assert e.bottom == ("b", "a")
    assert e.permutation == [2, 1]
    assert e.total == 1 + phi
    assert e.irreducible
    assert e.discontinuities() == [ONE]
    assert e.apply(Fraction(1, 2)) == phi + Fraction(1, 2)
    assert e.apply(1) == 0
    assert not IntervalExchange.from_permutation([1, 1], [1, 2]).irreducible


def test_iet_to_system():
    s = iet_to_system(golden_iet())
    phi = golden_ratio()
    tree = s.forest.component("I").tree
    a, b = s.letter("a"), s.letter("b")
    assert s.rank_hint == 2
    assert s.field_radicand == 5
    assert set(a.domain.generators) == {tree.point("l"), tree.point("l", "r", 1)}
    assert set(a.image.generators) == {tree.point("l", "r", phi), tree.point("r")}
    assert b.apply(tree.point("l", "r", 2)) == tree.point("l", "r", 1)
    assert subtree_diameter(b.domain) == phi


# --- Classical induction ---


def test_golden_first_step():
    step = rauzy_step(golden_iet())
    assert step.kind == "Top"
    assert (step.winner, step.loser) == ("b", "a")
    assert step.output.lengths == {"a": ONE, "b": golden_ratio() - 1}
    assert step.output.permutation == [2, 1]
    assert step.fold() == {"a": "a b", "b": "b"}


def test_three_interval_steps():
    kinds = [step.kind for step in rauzy_sequence(three_iet(), 4)]
    assert kinds == ["Bottom", "Top", "Bottom", "Bottom"]
    first = rauzy_step(three_iet())
    assert first.output.top == ("a", "c", "b")
    assert first.fold() == {"a": "a", "b": "b", "c": "a c"}


@pytest.mark.parametrize(
    "long_length, exact",
    [
        pytest.param(golden_ratio(), (1 + sympy.sqrt(5)) / 2, id="golden"),
        pytest.param(sqrt(2), sympy.sqrt(2), id="sqrt2"),
        pytest.param(sqrt(3), sympy.sqrt(3), id="sqrt3"),
    ],
)
def test_two_interval_runs_follow_continued_fraction(long_length, exact):
    e = IntervalExchange.from_permutation([1, long_length], [2, 1])
    kinds = [step.kind for step in rauzy_sequence(e, 24)]
    assert kinds[0] == "Top"
    runs = [len(list(group)) for _, group in itertools.groupby(kinds)][:-1]
    quotients = [int(q) for q in itertools.islice(continued_fraction_iterator(exact), len(runs))]
    assert runs == quotients


def test_rauzy_rejects_reducible_and_negative_counts():
    with pytest.raises(InvalidIET):
        rauzy_step(IntervalExchange.from_permutation([1, 2], [1, 2]))
    with pytest.raises(ValueError):
        rauzy_sequence(golden_iet(), -1)


def test_rational_swap_hits_equal_lengths():
    with pytest.raises(KeaneViolation) as err:
        rauzy_sequence(rational_swap(), 5)
    assert err.value.position == 1
    assert [step.kind for step in err.value.steps] == ["Top"]


@pytest.mark.parametrize(
    "exchange, passed, witness",
    [
        pytest.param(golden_iet(), True, None, id="golden"),
        pytest.param(rational_swap(), False, ("1/3", 3, "1/3"), id="rational"),
    ],
)
def test_keane_check(exchange, passed, witness):
    evidence = keane_check(exchange, 30)
    assert evidence.passed is passed
    assert evidence.witness == witness


# --- Comparison ---


def test_golden_inductions_match():
    report = compare_inductions(golden_iet(), 10)
    assert report.verdict == "MATCH"
    assert report.first_divergence is None
    assert [row.classical_kind for row in report.rows] == ["Top", "Bottom"] * 5
    assert report.to_dict()["verdict"] == "MATCH"


@pytest.mark.parametrize(
    "labels",
    [
        pytest.param(None, id="abc"),
        pytest.param(["x", "y", "z"], id="xyz"),
    ],
)
def test_three_interval_inductions_match(labels):
    report = compare_inductions(three_iet(labels), 10)
    assert report.verdict == "MATCH"
    assert len(report.rows) == 10


@pytest.mark.parametrize("k", [1, 5, 10])
@pytest.mark.parametrize("exchange", [pytest.param(golden_iet(), id="golden"), pytest.param(three_iet(), id="three")])
def test_both_policies_match_the_classical_induction(exchange, k):
    simultaneous = compare_inductions(exchange, k, policy="all")
    classical = compare_inductions(exchange, k, policy="rauzy")
    assert simultaneous.verdict == classical.verdict == "MATCH"
    assert [row.split_fold for row in simultaneous.rows] == [row.classical_fold for row in classical.rows]
    assert simultaneous.to_dict()["policy"] == "all"


def test_sqrt2_inductions_match():
    report = compare_inductions(IntervalExchange.from_permutation([1, sqrt(2)], [2, 1]), 10)
    assert report.verdict == "MATCH"


CERTIFIED_EXCHANGES = [
    pytest.param(golden_iet(), id="golden"),
    pytest.param(three_iet(), id="three-intervals"),
    pytest.param(three_iet(["x", "y", "z"]), id="three-intervals-xyz"),
    pytest.param(IntervalExchange.from_permutation([1, sqrt(2)], [2, 1]), id="sqrt2"),
    pytest.param(IntervalExchange.from_permutation([1, sqrt(3)], [2, 1]), id="sqrt3"),
    pytest.param(IntervalExchange.from_permutation([1, sqrt(5)], [2, 1]), id="sqrt5"),
    pytest.param(IntervalExchange.from_permutation([1, sqrt(6)], [2, 1]), id="sqrt6"),
    pytest.param(IntervalExchange.from_permutation([1, sqrt(7)], [2, 1]), id="sqrt7"),
    pytest.param(IntervalExchange.from_permutation([2, sqrt(3)], [2, 1]), id="two-sqrt3"),
    pytest.param(IntervalExchange.from_permutation([1, 1 + sqrt(2)], [2, 1]), id="silver"),
    pytest.param(IntervalExchange.from_permutation([Fraction(1, 3), sqrt(11)], [2, 1]), id="sqrt11"),
]


@pytest.mark.parametrize("policy", ["all", "rauzy"])
@pytest.mark.parametrize("exchange", CERTIFIED_EXCHANGES)
def test_runs_keep_homotopy_type(exchange, policy):
    history = run_induction(iet_to_system(exchange), max_steps=11, policy=policy)
    assert history.halted_at == 0
    assert len(history.steps) == 11
    assert all(c.passed for c in history.certificates())


def test_rational_swap_comparison_stops():
    report = compare_inductions(rational_swap(), 3)
    assert report.verdict == "MISMATCH"
    assert report.notes[0].startswith("classical induction stopped at step 2")


def test_wrong_split_choice_is_detected(mocker):
    mocker.patch(
        "isometry_systems.core.induction.select_rauzy_point",
        side_effect=lambda s, points: points[0] if points else None,
    )
    report = compare_inductions(golden_iet(), 1)
    assert report.verdict == "MISMATCH"
    assert report.first_divergence == 1
    assert report.rows[0].split_fold["a"] == "b a"
    assert report.rows[0].classical_fold["a"] == "a b"
