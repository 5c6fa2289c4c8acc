import itertools
from fractions import Fraction

import pytest

from isometry_systems.core.errors import (
    CycleDetected,
    Disconnected,
    HostMismatch,
    NonPositiveLength,
    PointNotInSubtree,
    PointNotInTree,
)
from isometry_systems.core.forest import (
    Point,
    branch_points,
    build_forest,
    build_tree,
    contains,
    contains_subtree,
    convex_hull,
    intersect_subtrees,
    is_extremal,
    merge_subtrees,
    project,
    subtree_diameter,
    vertex_point,
    whole_tree,
)
from isometry_systems.core.scalar import Scalar, sqrt


def segment(length=1, name="S"):
    return build_tree(name, ["u", "v"], [("u", "v", length)])


def tripod():
    return build_tree("Y", ["c", "x", "y", "z"], [("c", "x", 1), ("c", "y", 1), ("c", "z", 2)])


def path4():
    return build_tree("P", ["a", "b", "c", "d"], [("a", "b", 1), ("b", "c", 1), ("c", "d", 1)])


def big_tree():
    """q-r-s-t with extra legs u at s and v, w at t."""
    return build_tree(
        "T",
        ["q", "r", "s", "t", "u", "v", "w"],
        [("q", "r", 3), ("r", "s", 1), ("s", "t", 2), ("s", "u", Fraction(1, 2)), ("t", "v", sqrt(2)), ("t", "w", 1)],
    )


def hull(tree, *names):
    return convex_hull([vertex_point(n) for n in names], tree)


# --- build_forest ---


@pytest.mark.parametrize(
    "spec, components, vertices, edges",
    [
        pytest.param({"S": (["u", "v"], [("u", "v", 1)])}, 1, 2, 1, id="single edge"),
        pytest.param(
            {"Y": (["c", "x", "y", "z"], [("c", "x", 1), ("c", "y", 1), ("c", "z", 2)])}, 1, 4, 3, id="tripod"
        ),
        pytest.param(
            {"A": (["a0", "a1"], [("a0", "a1", 1)]), "B": (["b0", "b1"], [("b0", "b1", 2)])}, 2, 2, 1, id="two segments"
        ),
        pytest.param({"O": (["o"], [])}, 1, 1, 0, id="single vertex"),
    ],
)
def test_build_forest(spec, components, vertices, edges):
    forest = build_forest(spec)
    assert len(forest.components) == components
    first = forest.components[0].tree
    assert len(first.vertices) == vertices
    assert len(first.edges) == edges


@pytest.mark.parametrize(
    "vertices, edges, error",
    [
        pytest.param(["a", "b", "c"], [("a", "b", 1), ("b", "c", 1), ("c", "a", 1)], CycleDetected, id="triangle"),
        pytest.param(["a", "b"], [("a", "b", 1), ("b", "a", 2)], CycleDetected, id="multigraph"),
        pytest.param(["a"], [("a", "a", 1)], CycleDetected, id="loop"),
        pytest.param(["a", "b"], [("a", "b", 0)], NonPositiveLength, id="zero length"),
        pytest.param(["a", "b"], [("a", "b", -1)], NonPositiveLength, id="negative length"),
        pytest.param(["a", "b", "c"], [("a", "b", 1)], Disconnected, id="isolated vertex"),
        pytest.param([], [], Disconnected, id="empty"),
    ],
)
def test_build_tree_rejects(vertices, edges, error):
    with pytest.raises(error):
        build_tree("bad", vertices, edges)


def test_points_are_canonical():
    s = segment(3)
    assert s.point("u", "v", 0) == vertex_point("u")
    assert s.point("u", "v", 3) == vertex_point("v")
    assert s.point("v", "u", 1) == s.point("u", "v", 2)
    assert str(s.point("u", "v", Fraction(1, 2))) == "u~v@1/2"
    with pytest.raises(PointNotInTree):
        s.point("u", "v", 4)
    with pytest.raises(PointNotInTree):
        s.point("w")


# --- metric ---


def test_distance_and_walk():
    t = big_tree()
    q, w = vertex_point("q"), vertex_point("w")
    assert t.distance(q, w) == 7
    assert t.walk(q, w, 4) == vertex_point("s")
    assert t.walk(q, w, Fraction(11, 2)) == Point(edge=("s", "t"), offset=Scalar(Fraction(3, 2)))
    assert t.distance(vertex_point("u"), vertex_point("v")) == Fraction(5, 2) + sqrt(2)
    assert t.median(q, vertex_point("u"), w) == vertex_point("s")


def test_four_point_condition():
    t = big_tree()
    points = [vertex_point(v) for v in t.vertices]
    for x, y, z, w in itertools.combinations(points, 4):
        sums = sorted(
            [
                t.distance(x, y) + t.distance(z, w),
                t.distance(x, z) + t.distance(y, w),
                t.distance(x, w) + t.distance(y, z),
            ]
        )
        assert sums[1] == sums[2]


# --- convex hulls ---


def test_convex_hull_examples():
    s = segment()
    single = convex_hull([s.point("u", "v", Fraction(1, 3))], s)
    assert single.is_degenerate
    assert hull(s, "u", "v") == whole_tree(s)
    y = tripod()
    assert hull(y, "x", "y", "z") == whole_tree(y)
    assert hull(y, "x", "y", "z", "c").generators == {vertex_point("x"), vertex_point("y"), vertex_point("z")}
    with pytest.raises(PointNotInTree):
        convex_hull([vertex_point("nowhere")], y)


def test_convex_hull_is_monotone():
    t = big_tree()
    names = list(t.vertices)
    for small in itertools.combinations(names, 2):
        for extra in names:
            assert contains_subtree(hull(t, *small, extra), hull(t, *small))


# --- intersections ---


def test_intersection_examples():
    p = path4()
    assert intersect_subtrees(hull(p, "a", "c"), hull(p, "b", "d")) == hull(p, "b", "c")
    y = tripod()
    meet = intersect_subtrees(hull(y, "x", "c"), hull(y, "y", "c"))
    assert meet.generators == {vertex_point("c")}
    assert intersect_subtrees(hull(y, "x"), hull(y, "y")) is None
    with pytest.raises(HostMismatch):
        intersect_subtrees(hull(y, "x"), hull(p, "a"))


def subtree_corpus(t):
    return [
        hull(t, "q", "u"),
        hull(t, "v", "w"),
        hull(t, "r", "t"),
        convex_hull([t.point("s", "t", 1), vertex_point("w")], t),
        hull(t, "u"),
        hull(t, "q", "v", "w"),
        convex_hull([t.point("q", "r", 1), t.point("t", "v", 1)], t),
    ]


def _meet(a, b):
    if a is None or b is None:
        return None
    return intersect_subtrees(a, b)


def test_intersection_laws():
    t = big_tree()
    corpus = subtree_corpus(t)
    for a in corpus:
        assert intersect_subtrees(a, a) == a
    for a, b in itertools.product(corpus, repeat=2):
        assert _meet(a, b) == _meet(b, a)
    for a, b, c in itertools.product(corpus, repeat=3):
        assert _meet(_meet(a, b), c) == _meet(a, _meet(b, c))


def test_intersection_matches_membership():
    t = big_tree()
    samples = [vertex_point(v) for v in t.vertices] + [t.point("s", "t", 1), t.point("q", "r", 1)]
    for a, b in itertools.combinations(subtree_corpus(t), 2):
        meet = intersect_subtrees(a, b)
        for p in samples:
            assert (meet is not None and contains(meet, p)) == (contains(a, p) and contains(b, p))


# --- directions and extremality ---


@pytest.mark.parametrize(
    "tree_fn, point_fn, count",
    [
        pytest.param(segment, lambda t: vertex_point("u"), 1, id="segment endpoint"),
        pytest.param(segment, lambda t: t.point("u", "v", Fraction(1, 2)), 2, id="segment interior"),
        pytest.param(tripod, lambda t: vertex_point("c"), 3, id="tripod center"),
    ],
)
def test_directions_at(tree_fn, point_fn, count):
    t = tree_fn()
    assert len(t.directions_at(point_fn(t))) == count


def test_is_extremal():
    s = segment()
    whole = whole_tree(s)
    assert is_extremal(vertex_point("u"), whole)
    assert not is_extremal(s.point("u", "v", Fraction(1, 2)), whole)
    y = tripod()
    assert not is_extremal(vertex_point("c"), whole_tree(y))
    with pytest.raises(PointNotInSubtree):
        is_extremal(vertex_point("x"), hull(y, "y", "z"))


def test_branch_points_satisfy_euler_count():
    for t in (segment(), tripod(), big_tree(), path4()):
        region = whole_tree(t)
        excess = sum(len(t.directions_at(p)) - 2 for p in branch_points(region))
        assert excess == len(region.generators) - 2


def test_projection_diameter_and_merge():
    t = big_tree()
    assert project(hull(t, "v", "w"), vertex_point("q")) == vertex_point("t")
    assert subtree_diameter(hull(t, "q", "w")) == 7
    assert subtree_diameter(hull(t, "u")) == 0
    merged = merge_subtrees([hull(t, "q", "r"), hull(t, "r", "s"), hull(t, "v", "w")])
    assert merged == sorted([hull(t, "q", "s"), hull(t, "v", "w")], key=lambda s: s.key())
