# isometry_systems/core/indices.py
"""Orbit graphs, direction graphs and index estimates at points of the forest.

Point stabilizers are assumed trivial: an orbit cycle inside the explored
ball aborts the exploration with ``FreenessViolation``.
"""
import logging
from dataclasses import dataclass, field

import networkx as nx

from isometry_systems.core.errors import FreenessViolation
from isometry_systems.core.forest import Direction, Point, contains, hull_directions, is_extremal, meets_direction
from isometry_systems.core.induction import free_reduce
from isometry_systems.core.sysiso import Letter, SystemOfIsometries, Word

logger = logging.getLogger(__name__)

# --- Configuration ---
STAB_RANK = 0  # free actions only

Node = tuple[str, Point]


def _node_str(node: Node) -> str:
    return f"{node[0]}:{node[1]}"


@dataclass
class OrbitGraph:
    center: Node
    radius: int
    paths: dict[Node, Word]
    links: list[tuple[Node, Letter, Node]]

    def depth(self, node: Node) -> int:
        return len(self.paths[node])

    def nodes_at(self, depth: int) -> list[Node]:
        return [node for node, w in self.paths.items() if len(w) == depth]

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(self.paths)
        for u, x, v in self.links:
            g.add_edge(u, v, letter=str(x))
        return g


@dataclass
class DirectionGraph:
    nodes: list[tuple[Node, Direction]]
    links: list[tuple[tuple[Node, Direction], Letter, tuple[Node, Direction]]]

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(self.nodes)
        for u, x, v in self.links:
            g.add_edge(u, v, letter=str(x))
        return g

    @property
    def components(self) -> int:
        return nx.number_connected_components(self.to_networkx())

    def max_degree(self) -> int:
        return max((d for _, d in self.to_networkx().degree()), default=0)


def _explore(s: SystemOfIsometries, center: Node, r: int) -> OrbitGraph:
    alphabet = s.alphabet()
    isometries = {x: s.oriented(x) for x in alphabet}
    paths: dict[Node, Word] = {center: Word()}
    links = []
    frontier = [center]
    for _ in range(r):
        grown = []
        for node in frontier:
            component, p = node
            arrived_by = paths[node][-1] if len(paths[node]) else None
            for x in alphabet:
                if arrived_by is not None and x == arrived_by.inv():
                    continue
                f = isometries[x]
                if f.source != component or not contains(f.domain, p):
                    continue
                child = (f.target, f.apply(p))
                if child in paths:
                    cycle = free_reduce(paths[node].letters + (x,) + paths[child].inverse().letters)
                    raise FreenessViolation(
                        f"orbit of {_node_str(center)} closes up along '{cycle}'", cycle_word=str(cycle)
                    )
                paths[child] = paths[node].append(x)
                links.append((node, x, child))
                grown.append(child)
        frontier = grown
    return OrbitGraph(center, r, paths, links)


def _directions(s: SystemOfIsometries, node: Node) -> list[Direction]:
    region = s.forest.component(node[0]).region
    return hull_directions(region, node[1])


def orbit_graphs(s: SystemOfIsometries, x: Node, r: int) -> tuple[OrbitGraph, DirectionGraph]:
    """Breadth-first orbit of ``x`` to word length ``r`` and the directions carried along it."""
    if r < 0:
        raise ValueError(f"radius must be non-negative, got {r}")
    component, p = x
    if not contains(s.forest.component(component).region, p):
        raise ValueError(f"{p} is not in component '{component}'")
    orbit = _explore(s, x, r)
    nodes = [(node, d) for node in orbit.paths for d in _directions(s, node)]
    links = []
    for u, letter, v in orbit.links:
        f = s.oriented(letter)
        q = v[1]
        for d in _directions(s, u):
            if not meets_direction(f.domain, d):
                continue
            inside = next(g for g in f.domain.sorted_generators if f.domain.tree.in_direction(d, g))
            moved = f.image.tree.direction_toward(q, f.apply(inside))
            links.append(((u, d), letter, (v, moved)))
    return orbit, DirectionGraph(nodes, links)


@dataclass
class GeometricIndex:
    value: int
    radius: int
    components: int
    stable: bool
    stab_rank: int = STAB_RANK

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "radius": self.radius,
            "components": self.components,
            "stable": self.stable,
            "stab_rank": self.stab_rank,
        }


def geometric_index(s: SystemOfIsometries, x: Node, r: int) -> GeometricIndex:
    """Direction-graph components minus two; stable when radius r-1 gives the same count."""
    if r < 1:
        raise ValueError(f"radius must be at least 1, got {r}")
    _, now = orbit_graphs(s, x, r)
    _, before = orbit_graphs(s, x, r - 1)
    count = now.components
    return GeometricIndex(count + 2 * STAB_RANK - 2, r, count, count == before.components)


@dataclass
class QIndexEstimate:
    """Lower-bound ESTIMATE of the Q-index from persistent branches of the orbit ball."""

    value: int
    radius: int
    history: dict[int, int]
    non_extremal: bool
    bases_at_center: int
    stab_rank: int = STAB_RANK

    @property
    def hypothesis_holds(self) -> bool:
        return self.non_extremal

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "kind": "ESTIMATE",
            "radius": self.radius,
            "history": {str(k): v for k, v in sorted(self.history.items())},
            "non_extremal": self.non_extremal,
            "bases_at_center": self.bases_at_center,
            "stab_rank": self.stab_rank,
        }


def _growing_branches(orbit: OrbitGraph, radius: int) -> int:
    parents = {u for u, _, v in orbit.links if orbit.depth(v) == radius and orbit.depth(u) == radius - 1}
    return len(parents)


def q_index_estimate(s: SystemOfIsometries, x: Node, r: int) -> QIndexEstimate:
    if r < 2:
        raise ValueError(f"radius must be at least 2, got {r}")
    orbit, _ = orbit_graphs(s, x, r)
    history = {radius: _growing_branches(orbit, radius) - 2 for radius in range(2, r + 1)}
    isometries = [s.oriented(y) for y in s.alphabet()]
    non_extremal = True
    for component, p in orbit.paths:
        for f in isometries:
            if f.source == component and contains(f.domain, p) and is_extremal(p, f.domain):
                non_extremal = False
    bases = sum(1 for f in isometries if f.source == x[0] and contains(f.domain, x[1]))
    return QIndexEstimate(history[r] + 2 * STAB_RANK, r, history, non_extremal, bases)


# --- Global bound ---


@dataclass
class IndexEntry:
    point: str
    geometric: GeometricIndex | None = None
    q_estimate: QIndexEstimate | None = None
    freeness_violation: str | None = None

    def to_dict(self) -> dict:
        return {
            "point": self.point,
            "geometric": self.geometric.to_dict() if self.geometric else None,
            "q_estimate": self.q_estimate.to_dict() if self.q_estimate else None,
            "freeness_violation": self.freeness_violation,
        }


@dataclass
class IndexReport:
    rank: int
    radius: int
    entries: list[IndexEntry] = field(default_factory=list)
    skipped: list[str] = field(default_factory=list)

    @property
    def bound(self) -> int:
        return 2 * self.rank - 2

    @property
    def geometric_sum(self) -> int:
        return sum(e.geometric.value for e in self.entries if e.geometric)

    @property
    def q_sum(self) -> int:
        return sum(max(0, e.q_estimate.value) for e in self.entries if e.q_estimate)

    @property
    def bound_violation(self) -> bool:
        return self.geometric_sum > self.bound or self.q_sum > self.bound

    def to_dict(self) -> dict:
        return {
            "rank": self.rank,
            "radius": self.radius,
            "bound": self.bound,
            "geometric_sum": self.geometric_sum,
            "q_sum": self.q_sum,
            "bound_violation": self.bound_violation,
            "entries": [e.to_dict() for e in self.entries],
            "skipped_same_orbit": self.skipped,
            "scope": "orbit points are merged only when connected inside the explored ball",
        }


def index_bound_report(s: SystemOfIsometries, rank: int, points: list[Node], r: int) -> IndexReport:
    report = IndexReport(rank, r)
    explored: set[Node] = set()
    for node in points:
        label = _node_str(node)
        if node in explored:
            report.skipped.append(label)
            continue
        entry = IndexEntry(label)
        try:
            orbit, _ = orbit_graphs(s, node, r)
            explored |= set(orbit.paths)
            entry.geometric = geometric_index(s, node, r)
            entry.q_estimate = q_index_estimate(s, node, max(r, 2))
        except FreenessViolation as e:
            logger.warning(f"Excluding {label} from index sums: {e}")
            entry.geometric, entry.q_estimate = None, None
            entry.freeness_violation = e.cycle_word
            explored.add(node)
        report.entries.append(entry)
    if report.bound_violation:
        logger.warning(f"Index sums exceed 2N-2 = {report.bound}: {report.geometric_sum}, {report.q_sum}")
    return report
