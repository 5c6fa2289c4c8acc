from fractions import Fraction

import pytest

from isometry_systems.core.errors import EmptyOutput, NotASplittingPoint
from isometry_systems.core.forest import build_forest, convex_hull, subtree_diameter
from isometry_systems.core.iet import IntervalExchange, golden_iet, iet_to_system
from isometry_systems.core.induction import (
    GraphMap,
    SplittingPoint,
    check_surface_directions,
    classify_levitt,
    find_splitting_points,
    fresh_names,
    homotopy_certificate,
    is_segment_system,
    rauzy_split,
    rips_step,
    run_induction,
    select_rauzy_point,
    split_all,
    split_at,
)
from isometry_systems.core.lamination import regular_words
from isometry_systems.core.scalar import ONE, golden_ratio, sqrt
from isometry_systems.core.sysiso import (
    Letter,
    SystemOfIsometries,
    Word,
    admissible_language,
    associated_graph,
    make_isometry,
)


def segment_system(length, letters):
    forest = build_forest({"T": (["o", "e"], [("o", "e", length)])})
    c = forest.component("T")

    def at(x):
        return c.tree.point("o", "e", x)

    isometries = [
        make_isometry(name, c, c, [(at(d0), at(i0)), (at(d1), at(i1))])
        for name, ((d0, d1), (i0, i1)) in letters.items()
    ]
    return SystemOfIsometries(forest, tuple(isometries))


def golden():
    return iet_to_system(golden_iet())


def three_intervals():
    lengths = [Fraction(1, 2), Fraction(1, 3), Fraction(1, 6) + sqrt(2) / 100]
    return iet_to_system(IntervalExchange.from_permutation(lengths, [3, 2, 1]))


def at_golden(s, x):
    return s.forest.component("I").tree.point("l", "r", x)


def w(text):
    return Word.parse(text)


# --- Rips machine ---


def test_golden_rips_halts_immediately():
    s = golden()
    step = rips_step(s)
    assert step.halted
    assert step.output is s
    assert step.fold_map == GraphMap.identity(associated_graph(s))


def test_translation_shrinks_then_empties():
    s = segment_system(3, {"t": ((0, 2), (1, 3))})
    step = rips_step(s)
    assert not step.halted
    assert step.output.forest.names == ["T"]
    tree = s.forest.component("T").tree
    assert step.output.forest.component("T").region == convex_hull([tree.point("o", "e", 1), tree.point("o", "e", 2)], tree)
    (t,) = step.output.letters
    assert t.domain.sorted_generators == [tree.point("o", "e", 1)]
    assert t.image.sorted_generators == [tree.point("o", "e", 2)]
    with pytest.raises(EmptyOutput):
        rips_step(step.output)


def test_rips_drops_letters_outside_overlaps():
    s = segment_system(3, {"a": ((0, 1), (2, 3)), "b": ((2, 3), (2, 3))})
    step = rips_step(s)
    assert step.dropped == ["a"]
    assert [f.label for f in step.output.letters] == ["b"]
    assert step.fold_map.edge_images == {"b": w("b")}
    assert rips_step(step.output).halted


def test_run_induction_stops_on_empty_output():
    history = run_induction(segment_system(3, {"t": ((0, 2), (1, 3))}), max_steps=5)
    assert history.stop_reason == "empty-output"
    assert len(history.steps) == 1
    assert history.classification == "Unknown"


def test_run_induction_zero_budget():
    history = run_induction(golden(), max_steps=0)
    assert history.steps == []
    assert history.final is None
    assert history.budget_exhausted
    assert history.stop_reason == "max-steps"
    assert history.to_dict()["steps_used"] == 0


def test_run_induction_halts_then_runs_out_of_points():
    history = run_induction(segment_system(3, {"a": ((0, 1), (2, 3)), "b": ((2, 3), (2, 3))}), max_steps=10)
    assert history.halted_at == 1
    assert history.classification == "Surface"
    assert history.stop_reason == "no-splitting-points"
    assert not history.budget_exhausted


# --- Splitting points ---


def test_golden_splitting_points():
    s = golden()
    phi = golden_ratio()
    found = [(p.x, p.a0, p.a1) for p in find_splitting_points(s)]
    assert found == [
        (at_golden(s, 1), Letter("a"), Letter("b", True)),
        (at_golden(s, 1), Letter("b"), Letter("b", True)),
        (at_golden(s, phi), Letter("a", True), Letter("b")),
        (at_golden(s, phi), Letter("b", True), Letter("b")),
    ]


def test_split_at_rejects_non_splitting_point():
    s = golden()
    p = find_splitting_points(s)[0]
    bogus = SplittingPoint(p.component, p.x, p.direction, Letter("a", True), p.a1)
    with pytest.raises(NotASplittingPoint):
        split_at(s, bogus)


def test_split_at_cuts_the_segment():
    s = golden()
    p = find_splitting_points(s)[0]
    step = split_at(s, p)
    out = step.output
    assert out.forest.names == ["I.1", "I.2"]
    assert step.pieces == ("I.1", "I.2")
    assert subtree_diameter(out.forest.component("I.1").region) == ONE
    assert sorted(f.label for f in out.letters) == ["a", "b.1", "b.2"]
    assert step.fold_map.vertex_images == {"I.1": "I", "I.2": "I"}
    assert {name: str(image) for name, image in step.fold_map.edge_images.items()} == {"a": "a", "b.1": "b", "b.2": "b"}
    cert = homotopy_certificate(associated_graph(out), associated_graph(s))
    assert cert.betti == cert.betti_start == 2
    assert cert.low_valence == []


@pytest.mark.parametrize(
    "base, taken, count, expected",
    [
        pytest.param("I", set(), 2, ["I.1", "I.2"], id="fresh"),
        pytest.param("I.2", {"I.1", "I.2"}, 2, ["I.3", "I.4"], id="skips-taken"),
        pytest.param("b.1.3", {"b", "b.1", "b.2"}, 1, ["b.3"], id="root-only"),
    ],
)
def test_fresh_names(base, taken, count, expected):
    assert fresh_names(base, taken, count) == expected


def test_split_all_renames_repeated_cuts():
    s = golden()
    step = split_all(s, classical_on_segments=False)
    out = step.output
    assert out.forest.names == ["I.1", "I.3", "I.4"]
    assert sorted(f.label for f in out.letters) == ["a", "b.2", "b.3", "b.4"]
    assert set(step.fold_map.vertex_images.values()) == {"I"}
    assert {name: str(image) for name, image in step.fold_map.edge_images.items()} == {
        "a": "a",
        "b.2": "b",
        "b.3": "b",
        "b.4": "b",
    }
    assert homotopy_certificate(associated_graph(out), associated_graph(s)).passed


def test_split_all_resolves_shared_points_once():
    s = golden()
    points = find_splitting_points(s)
    step = split_all(s, classical_on_segments=False)
    assert step.split_data[0] == points[0]
    assert len(step.interfering) >= 2
    assert len(step.output.forest.components) >= 2
    assert set(step.fold_map.vertex_images.values()) == {"I"}
    assert all(len(image) == 1 and image[0].name in ("a", "b") for image in step.fold_map.edge_images.values())


@pytest.mark.parametrize(
    "system",
    [
        pytest.param(golden(), id="golden"),
        pytest.param(three_intervals(), id="three-intervals"),
    ],
)
def test_repeated_split_all_keeps_names_and_homotopy_type(system):
    start = associated_graph(system)
    current, fold = system, GraphMap.identity(start)
    for _ in range(10):
        step = split_all(current, classical_on_segments=False)
        assert step.split_data
        labels = [f.label for f in step.output.letters]
        assert len(labels) == len(set(labels))
        assert homotopy_certificate(associated_graph(step.output), start).passed
        fold = step.fold_map.then(fold)
        current = step.output
    assert len(current.forest.components) > 1
    assert set(fold.vertex_images.values()) == set(start.vertices)
    assert {x.name for image in fold.edge_images.values() for x in image} <= {name for name, _, _ in start.edges}


def test_split_all_on_a_segment_takes_the_classical_step():
    s = golden()
    assert is_segment_system(s)
    assert split_all(s).fold_map == rauzy_split(s).fold_map
    assert split_all(s).output.forest.names == ["I"]


@pytest.mark.parametrize(
    "system",
    [
        pytest.param(golden(), id="golden"),
        pytest.param(three_intervals(), id="three-intervals"),
    ],
)
def test_all_policy_runs_many_steps(system):
    everything = run_induction(system, max_steps=12, policy="all")
    classical = run_induction(system, max_steps=12, policy="rauzy")
    assert everything.halted_at == 0
    assert len(everything.steps) == 12
    assert everything.stop_reason == "max-steps"
    assert all(c.passed for c in everything.certificates())
    assert [step.fold_map for step in everything.steps] == [step.fold_map for step in classical.steps]


def test_split_all_without_points_is_identity():
    s = segment_system(3, {"b": ((0, 3), (0, 3))})
    step = split_all(s)
    assert step.output is s
    assert step.split_data == []


def test_rauzy_selection_and_fold():
    s = golden()
    chosen = select_rauzy_point(s, find_splitting_points(s))
    assert chosen.x == at_golden(s, golden_ratio())
    assert chosen.a0 == Letter("a", True)
    step = rauzy_split(s)
    assert step.output.forest.names == ["I"]
    assert step.fold_map.edge_images["a"] == w("a b")
    assert step.fold_map.edge_images["b"] == w("b")
    widths = sorted(subtree_diameter(f.domain) for f in step.output.letters)
    assert widths == [golden_ratio() - 1, ONE]


# --- Surface directions ---


@pytest.mark.parametrize(
    "system, passed",
    [
        pytest.param(golden(), True, id="golden-exchange"),
        pytest.param(segment_system(3, {"t": ((0, 2), (1, 3))}), False, id="translation"),
    ],
)
def test_surface_directions(system, passed):
    report = check_surface_directions(system)
    assert report.passed is passed
    assert report.to_dict()["verdict"] == ("PASS" if passed else "FAIL")


# --- Levitt classification ---


@pytest.mark.parametrize(
    "metrics, expected",
    [
        pytest.param([(k, Fraction(8, k)) for k in range(1, 12)], "LevittEvidence", id="growing-and-shrinking"),
        pytest.param([(k, Fraction(8, k)) for k in range(1, 8)], "Unknown", id="too-short"),
        pytest.param([(k, 8) for k in range(1, 12)], "Unknown", id="not-shrinking"),
        pytest.param([(1, Fraction(8, k)) for k in range(1, 12)], "Unknown", id="not-growing"),
    ],
)
def test_classify_levitt(metrics, expected):
    assert classify_levitt(metrics) == expected


# --- Graph maps and certificates ---


def test_graph_map_composition_reduces():
    f = GraphMap({"v": "v"}, {"a": w("a b"), "b": w("b")})
    g = GraphMap({"v": "v"}, {"a": w("a"), "b": w("a^-1 b")})
    composed = f.then(g)
    assert composed.edge_images == {"a": w("b"), "b": w("a^-1 b")}
    assert f.image_of_letter(Letter("a", True)) == w("b^-1 a^-1")
    assert f.image_of_word(w("a b^-1")) == w("a")


def test_rose_certificate_bound():
    gamma = associated_graph(golden())
    cert = homotopy_certificate(gamma, gamma)
    assert cert.bound == 2
    assert cert.high_valence_count == 1
    assert cert.passed


# --- Language preservation ---


RIPS_SYSTEMS = [
    pytest.param(segment_system(3, {"t": ((0, 2), (1, 3))}), id="translation"),
    pytest.param(segment_system(3, {"a": ((0, 1), (2, 3)), "b": ((2, 3), (2, 3))}), id="dropped-letter"),
    pytest.param(segment_system(4, {"a": ((0, 2), (2, 4)), "b": ((1, 3), (0, 2))}), id="overlapping"),
    pytest.param(golden(), id="golden"),
]


@pytest.mark.parametrize("n", range(1, 9))
@pytest.mark.parametrize("system", RIPS_SYSTEMS)
def test_rips_step_keeps_language(system, n):
    step = rips_step(system)
    before = admissible_language(system, n + 2)
    projected = {step.fold_map.image_of_word(word) for word in admissible_language(step.output, n)}
    assert projected <= {word for word in before if len(word) <= n}
    middles = {word[1 : n + 1] for word in before if len(word) == n + 2}
    assert middles <= projected


@pytest.mark.parametrize("n", range(1, 7))
@pytest.mark.parametrize(
    "split, stretch",
    [
        pytest.param(lambda s: split_at(s, find_splitting_points(s)[0]), 1, id="first-point"),
        pytest.param(lambda s: split_all(s, classical_on_segments=False), 1, id="every-point"),
        pytest.param(rauzy_split, 2, id="classical"),
    ],
)
@pytest.mark.parametrize("system", [pytest.param(golden(), id="golden"), pytest.param(three_intervals(), id="three")])
def test_split_fold_sends_regular_words_into_the_language(system, split, stretch, n):
    step = split(system)
    language = admissible_language(system, stretch * n)
    for word in regular_words(step.output, n):
        image = step.fold_map.image_of_word(word)
        assert n <= len(image) <= stretch * n
        assert image in language
