# isometry_systems/core/forest.py
"""Finite metric trees and forests with exact edge lengths.

Points are canonical: a point at offset 0 or at the full length of an edge is
stored as the vertex. Subtrees are convex hulls and are always stored by the
extremal points of the hull, so equal subtrees compare equal.
"""
import itertools
import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable

import networkx as nx

from isometry_systems.core.errors import (
    CycleDetected,
    Disconnected,
    HostMismatch,
    NonPositiveLength,
    PointNotInSubtree,
    PointNotInTree,
)
from isometry_systems.core.scalar import ZERO, Scalar

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Point:
    vertex: str | None = None
    edge: tuple[str, str] | None = None
    offset: Scalar | None = None

    def key(self) -> tuple:
        if self.vertex is not None:
            return (0, self.vertex)
        return (1, self.edge[0], self.edge[1], self.offset)

    @property
    def is_vertex(self) -> bool:
        return self.vertex is not None

    def __str__(self):
        if self.vertex is not None:
            return self.vertex
        return f"{self.edge[0]}~{self.edge[1]}@{self.offset}"


def vertex_point(name: str) -> Point:
    return Point(vertex=name)


def sort_points(points: Iterable[Point]) -> list[Point]:
    return sorted(points, key=Point.key)


@dataclass(frozen=True)
class Edge:
    tail: str
    head: str
    length: Scalar


@dataclass(frozen=True)
class Direction:
    """A germ at ``basepoint``: the side of ``edge`` leading to vertex ``toward``."""

    basepoint: Point
    edge: tuple[str, str]
    toward: str

    def key(self) -> tuple:
        return (self.basepoint.key(), self.edge, self.toward)

    def __str__(self):
        return f"{self.basepoint}->{self.toward}"


@dataclass(frozen=True)
class MetricTree:
    name: str
    vertices: tuple[str, ...]
    edges: tuple[Edge, ...]

    @cached_property
    def graph(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(self.vertices)
        for index, e in enumerate(self.edges):
            g.add_edge(e.tail, e.head, index=index, length=e.length)
        return g

    @cached_property
    def _edge_lookup(self) -> dict[tuple[str, str], Edge]:
        lookup = {}
        for e in self.edges:
            lookup[(e.tail, e.head)] = e
            lookup[(e.head, e.tail)] = e
        return lookup

    @cached_property
    def _vertex_distances(self) -> dict[str, dict[str, Scalar]]:
        return dict(nx.all_pairs_dijkstra_path_length(self.graph, weight="length"))

    @cached_property
    def leaves(self) -> list[Point]:
        if len(self.vertices) == 1:
            return [vertex_point(self.vertices[0])]
        return [vertex_point(v) for v in self.vertices if self.graph.degree(v) == 1]

    def edge_between(self, u: str, v: str) -> Edge:
        try:
            return self._edge_lookup[(u, v)]
        except KeyError as e:
            raise PointNotInTree(f"tree '{self.name}' has no edge {u}~{v}") from e

    def point(self, u: str, v: str | None = None, offset: Scalar | None = None) -> Point:
        """Canonical point at vertex ``u`` or at ``offset`` from ``u`` along edge ``u~v``."""
        if v is None:
            if u not in self.graph:
                raise PointNotInTree(f"tree '{self.name}' has no vertex '{u}'")
            return vertex_point(u)
        e = self.edge_between(u, v)
        offset = Scalar.coerce(offset)
        if e.tail != u:
            offset = e.length - offset
        if offset < 0 or offset > e.length:
            raise PointNotInTree(f"offset {offset} is outside edge {u}~{v} of tree '{self.name}'")
        if offset == 0:
            return vertex_point(e.tail)
        if offset == e.length:
            return vertex_point(e.head)
        return Point(edge=(e.tail, e.head), offset=offset)

    def check_point(self, p: Point) -> None:
        if p.is_vertex:
            if p.vertex not in self.graph:
                raise PointNotInTree(f"point {p} is not a vertex of tree '{self.name}'")
            return
        e = self._edge_lookup.get(p.edge)
        if e is None or (e.tail, e.head) != p.edge or not (ZERO < p.offset < e.length):
            raise PointNotInTree(f"point {p} does not lie in tree '{self.name}'")

    def _anchors(self, p: Point) -> list[tuple[str, Scalar]]:
        if p.is_vertex:
            return [(p.vertex, ZERO)]
        e = self._edge_lookup[p.edge]
        return [(e.tail, p.offset), (e.head, e.length - p.offset)]

    # --- Metric ---

    def distance(self, p: Point, q: Point) -> Scalar:
        if not p.is_vertex and p.edge == q.edge:
            return abs(p.offset - q.offset)
        dist = self._vertex_distances
        return min(da + dist[a][b] + db for a, da in self._anchors(p) for b, db in self._anchors(q))

    def on_segment(self, p: Point, a: Point, b: Point) -> bool:
        return self.distance(a, p) + self.distance(p, b) == self.distance(a, b)

    def _offset_along(self, p: Point, e: Edge) -> Scalar:
        if p.is_vertex:
            return ZERO if p.vertex == e.tail else e.length
        return p.offset

    def _common_edge(self, p: Point, q: Point) -> Edge:
        if not p.is_vertex:
            return self._edge_lookup[p.edge]
        if not q.is_vertex:
            return self._edge_lookup[q.edge]
        return self._edge_lookup[(p.vertex, q.vertex)]

    def _itinerary(self, p: Point, q: Point) -> list[Point]:
        """Points along [p, q] such that consecutive points share an edge."""
        if p == q:
            return [p]
        if not p.is_vertex and p.edge == q.edge:
            return [p, q]
        dist = self._vertex_distances

        def nearest(x: Point, target: Point) -> str:
            return min(self._anchors(x), key=lambda a: a[1] + min(dist[a[0]][b] + db for b, db in self._anchors(target)))[0]

        start, end = nearest(p, q), nearest(q, p)
        path = [vertex_point(v) for v in nx.shortest_path(self.graph, start, end)]
        points = [p]
        for x in path + [q]:
            if x != points[-1]:
                points.append(x)
        return points

    def walk(self, p: Point, q: Point, t: Scalar) -> Point:
        """The point of [p, q] at distance ``t`` from ``p``."""
        t = Scalar.coerce(t)
        if t < 0 or t > self.distance(p, q):
            raise PointNotInTree(f"cannot walk {t} from {p} toward {q}")
        itinerary = self._itinerary(p, q)
        for x, y in zip(itinerary, itinerary[1:]):
            step = self.distance(x, y)
            if t <= step:
                e = self._common_edge(x, y)
                ox, oy = self._offset_along(x, e), self._offset_along(y, e)
                offset = ox + t if oy > ox else ox - t
                return self.point(e.tail, e.head, offset)
            t -= step
        return q

    # --- Directions ---

    def direction_toward(self, x: Point, y: Point) -> Direction:
        if x == y:
            raise PointNotInTree(f"no direction from {x} to itself")
        nxt = self._itinerary(x, y)[1]
        e = self._common_edge(x, nxt)
        toward = e.head if self._offset_along(nxt, e) > self._offset_along(x, e) else e.tail
        return Direction(basepoint=x, edge=(e.tail, e.head), toward=toward)

    def directions_at(self, x: Point) -> list[Direction]:
        self.check_point(x)
        if not x.is_vertex:
            return [Direction(x, x.edge, x.edge[0]), Direction(x, x.edge, x.edge[1])]
        found = []
        for w in sorted(self.graph.neighbors(x.vertex)):
            e = self._edge_lookup[(x.vertex, w)]
            found.append(Direction(x, (e.tail, e.head), w))
        return found

    def in_direction(self, d: Direction, p: Point) -> bool:
        return p != d.basepoint and self.direction_toward(d.basepoint, p) == d

    def median(self, a: Point, b: Point, c: Point) -> Point:
        t = (self.distance(a, b) + self.distance(a, c) - self.distance(b, c)) / 2
        return self.walk(a, b, t)


@dataclass(frozen=True)
class Subtree:
    """Convex hull of ``generators`` in ``tree``; generators are the hull's extremal points."""

    tree: MetricTree = field(compare=False, repr=False)
    generators: frozenset[Point]
    host: str = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "host", self.tree.name)

    @property
    def sorted_generators(self) -> list[Point]:
        return sort_points(self.generators)

    @property
    def is_degenerate(self) -> bool:
        return len(self.generators) == 1

    def key(self) -> tuple:
        return (self.host, tuple(p.key() for p in self.sorted_generators))

    def __str__(self):
        return f"{self.host}[{' '.join(str(p) for p in self.sorted_generators)}]"


def _extremal_generators(tree: MetricTree, points: set[Point]) -> frozenset[Point]:
    kept = set()
    for g in points:
        directions = {tree.direction_toward(g, h) for h in points if h != g}
        if len(directions) <= 1:
            kept.add(g)
    return frozenset(kept)


def convex_hull(points: Iterable[Point], tree: MetricTree) -> Subtree:
    points = set(points)
    if not points:
        raise PointNotInTree("the convex hull of no points is undefined")
    for p in points:
        tree.check_point(p)
    return Subtree(tree=tree, generators=_extremal_generators(tree, points))


def whole_tree(tree: MetricTree) -> Subtree:
    return Subtree(tree=tree, generators=frozenset(tree.leaves))


def contains(s: Subtree, p: Point) -> bool:
    tree = s.tree
    gens = s.sorted_generators
    g0 = gens[0]
    if len(gens) == 1:
        return p == g0
    return any(tree.on_segment(p, g0, g) for g in gens[1:])


def contains_subtree(outer: Subtree, inner: Subtree) -> bool:
    return outer.host == inner.host and all(contains(outer, g) for g in inner.generators)


def distance_to(s: Subtree, p: Point) -> Scalar:
    tree = s.tree
    g0 = s.sorted_generators[0]
    d0 = tree.distance(p, g0)
    return min((d0 + tree.distance(p, g) - tree.distance(g0, g)) / 2 for g in s.generators)


def project(s: Subtree, p: Point) -> Point:
    """Closest point of ``s`` to ``p``."""
    g0 = s.sorted_generators[0]
    return s.tree.walk(p, g0, distance_to(s, p))


def intersect_subtrees(a: Subtree, b: Subtree) -> Subtree | None:
    if a.host != b.host:
        raise HostMismatch(f"cannot intersect subtrees of '{a.host}' and '{b.host}'")
    candidates = {g for g in a.generators if contains(b, g)}
    candidates |= {g for g in b.generators if contains(a, g)}
    for first, second in ((a, b), (b, a)):
        for g in first.generators:
            p = project(second, g)
            if contains(first, p):
                candidates.add(p)
    if not candidates:
        return None
    return convex_hull(candidates, a.tree)


def hull_directions(s: Subtree, x: Point) -> list[Direction]:
    tree = s.tree
    found = {tree.direction_toward(x, g) for g in s.generators if g != x}
    return sorted(found, key=Direction.key)


def meets_direction(s: Subtree, d: Direction) -> bool:
    return any(s.tree.in_direction(d, g) for g in s.generators)


def is_extremal(x: Point, s: Subtree) -> bool:
    if not contains(s, x):
        raise PointNotInSubtree(f"point {x} is not in subtree {s}")
    return len(hull_directions(s, x)) <= 1


def branch_points(s: Subtree) -> list[Point]:
    tree = s.tree
    found = set()
    for a, b, c in itertools.combinations(s.sorted_generators, 3):
        m = tree.median(a, b, c)
        if len(hull_directions(s, m)) >= 3:
            found.add(m)
    return sort_points(found)


def subtree_diameter(s: Subtree) -> Scalar:
    tree = s.tree
    return max((tree.distance(p, q) for p, q in itertools.combinations(s.generators, 2)), default=ZERO)


def merge_subtrees(subtrees: list[Subtree]) -> list[Subtree]:
    """Connected components of the union of subtrees of one host, sorted by key."""
    if not subtrees:
        return []
    g = nx.Graph()
    g.add_nodes_from(range(len(subtrees)))
    for i, j in itertools.combinations(range(len(subtrees)), 2):
        if intersect_subtrees(subtrees[i], subtrees[j]) is not None:
            g.add_edge(i, j)
    merged = []
    for group in nx.connected_components(g):
        points = set().union(*(subtrees[i].generators for i in group))
        merged.append(convex_hull(points, subtrees[0].tree))
    return sorted(merged, key=Subtree.key)


# --- Forests ---


@dataclass(frozen=True)
class ForestComponent:
    """A connected piece of a forest, carried as a region of a host tree."""

    name: str
    region: Subtree

    @property
    def tree(self) -> MetricTree:
        return self.region.tree


@dataclass(frozen=True)
class Forest:
    components: tuple[ForestComponent, ...]

    def __post_init__(self):
        ordered = tuple(sorted(self.components, key=lambda c: c.name))
        names = [c.name for c in ordered]
        if len(set(names)) != len(names):
            raise Disconnected(f"duplicate component names in forest: {names}")
        object.__setattr__(self, "components", ordered)

    @property
    def names(self) -> list[str]:
        return [c.name for c in self.components]

    def component(self, name: str) -> ForestComponent:
        for c in self.components:
            if c.name == name:
                return c
        raise PointNotInTree(f"forest has no component '{name}'")

    def trees(self) -> dict[str, MetricTree]:
        return {c.tree.name: c.tree for c in self.components}


def build_tree(name: str, vertices: Iterable[str], edges: Iterable[tuple[str, str, Scalar]]) -> MetricTree:
    g = nx.Graph()
    g.add_nodes_from(vertices)
    canonical = []
    for u, v, length in edges:
        length = Scalar.coerce(length)
        if u == v:
            raise CycleDetected(f"tree '{name}': loop at vertex '{u}'")
        if g.has_edge(u, v):
            raise CycleDetected(f"tree '{name}': repeated edge {u}~{v}")
        if length <= 0:
            raise NonPositiveLength(f"tree '{name}': edge {u}~{v} has length {length}")
        g.add_edge(u, v)
        tail, head = sorted((u, v))
        canonical.append(Edge(tail, head, length))
    if g.number_of_nodes() == 0:
        raise Disconnected(f"tree '{name}' has no vertices")
    if not nx.is_connected(g):
        raise Disconnected(f"tree '{name}' is not connected")
    if g.number_of_edges() != g.number_of_nodes() - 1:
        raise CycleDetected(f"tree '{name}' contains a cycle")
    canonical.sort(key=lambda e: (e.tail, e.head))
    return MetricTree(name=name, vertices=tuple(sorted(g.nodes)), edges=tuple(canonical))


def build_forest(spec: dict[str, tuple[Iterable[str], Iterable[tuple[str, str, Scalar]]]]) -> Forest:
    """One component per declared tree, covering the whole tree."""
    components = []
    for name, (vertices, edges) in spec.items():
        tree = build_tree(name, vertices, edges)
        components.append(ForestComponent(name=name, region=whole_tree(tree)))
    logger.debug(f"Built forest with {len(components)} components")
    return Forest(tuple(components))
