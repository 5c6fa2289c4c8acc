# isometry_systems/core/lamination.py
"""Finite-depth views of the admissible lamination: regular words, legal turns,
Whitehead graphs, leaf sets and uniform recurrence."""
import itertools
import logging
from dataclasses import dataclass, field

import networkx as nx

from isometry_systems.core.errors import BasepointMismatch, BudgetExceeded
from isometry_systems.core.forest import Point, Subtree, contains, convex_hull
from isometry_systems.core.sysiso import (
    DEFAULT_MAX_WORDS,
    GraphGamma,
    Letter,
    Path,
    SystemOfIsometries,
    Word,
    admissible_language,
    associated_graph,
)

logger = logging.getLogger(__name__)

# --- Configuration ---
DEFAULT_LEGALITY_DEPTH = 8


def regular_words(s: SystemOfIsometries, n: int, language: dict[Word, Path] | None = None) -> list[Word]:
    """Admissible words of length ``n`` whose composed domain has more than one point."""
    if n < 1:
        raise ValueError(f"depth must be at least 1, got {n}")
    if language is None:
        language = admissible_language(s, n)
    return [w for w, path in language.items() if len(w) == n and path.nondegenerate]


# --- Train tracks ---


@dataclass(frozen=True)
class Turn:
    vertex: str
    pair: tuple[Letter, Letter]

    @classmethod
    def of(cls, vertex: str, x: Letter, y: Letter) -> "Turn":
        return cls(vertex, tuple(sorted((x, y))))

    def __str__(self):
        return f"{self.vertex}:{{{self.pair[0]}, {self.pair[1]}}}"


@dataclass(frozen=True)
class TrainTrack:
    graph: GraphGamma
    legal: frozenset[Turn]
    depth: int

    def turns_at(self, vertex: str) -> list[Turn]:
        letters = self.graph.initial_letters(vertex)
        return [Turn.of(vertex, x, y) for x, y in itertools.combinations(letters, 2)]

    def illegal(self) -> list[Turn]:
        every = [t for v in self.graph.vertices for t in self.turns_at(v)]
        return [t for t in every if t not in self.legal]

    def to_dict(self) -> dict:
        return {
            "depth": self.depth,
            "legal": sorted(str(t) for t in self.legal),
            "illegal": sorted(str(t) for t in self.illegal()),
        }


def legal_turns(s: SystemOfIsometries, gamma: GraphGamma, depth: int = DEFAULT_LEGALITY_DEPTH) -> TrainTrack:
    """A turn {x^-1, y} is legal when x y sits in the middle of a regular word of length 2*depth + 2."""
    if depth < 1:
        raise ValueError(f"legality depth must be at least 1, got {depth}")
    length = 2 * depth + 2
    legal = set()
    for w in regular_words(s, length):
        x, y = w[depth], w[depth + 1]
        legal.add(Turn.of(gamma.origin(y), x.inv(), y))
    logger.info(f"Found {len(legal)} legal turns at depth {depth}")
    return TrainTrack(gamma, frozenset(legal), depth)


@dataclass
class WhiteheadGraph:
    vertex: str
    nodes: list[Letter]
    links: list[Turn]

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(self.nodes)
        g.add_edges_from(t.pair for t in self.links)
        return g

    def parts(self) -> list[list[Letter]]:
        return sorted(sorted(c) for c in nx.connected_components(self.to_networkx()))

    @property
    def connected(self) -> bool:
        return len(self.parts()) <= 1


@dataclass
class WhiteheadReport:
    depth: int
    graphs: list[WhiteheadGraph]

    @property
    def connected(self) -> bool:
        return all(g.connected for g in self.graphs)

    def to_dict(self) -> dict:
        return {
            "depth": self.depth,
            "verdict": "PASS" if self.connected else "FAIL",
            "vertices": {
                g.vertex: {
                    "connected": g.connected,
                    "links": sorted(str(t) for t in g.links),
                    "partition": [[str(x) for x in part] for part in g.parts()],
                }
                for g in self.graphs
            },
        }


def whitehead_report(s: SystemOfIsometries, tt: TrainTrack) -> WhiteheadReport:
    graphs = []
    for v in tt.graph.vertices:
        links = sorted((t for t in tt.legal if t.vertex == v), key=lambda t: t.pair)
        graphs.append(WhiteheadGraph(v, tt.graph.initial_letters(v), links))
    report = WhiteheadReport(tt.depth, graphs)
    for g in graphs:
        if not g.connected:
            logger.info(f"Whitehead graph at '{g.vertex}' is disconnected: {g.parts()}")
    return report


@dataclass
class CarriedSubgraph:
    subgraph: GraphGamma
    proper_free_factor: bool

    def to_dict(self) -> dict:
        return {
            "vertices": list(self.subgraph.vertices),
            "edges": [name for name, _, _ in self.subgraph.edges],
            "betti": self.subgraph.betti,
            "proper_free_factor": self.proper_free_factor,
        }


def carried_subgraph(s: SystemOfIsometries, words, gamma: GraphGamma | None = None) -> CarriedSubgraph:
    """Smallest subgraph of the associated graph crossed by the words.

    An empty word set carries the empty subgraph, never reported as a free factor.
    """
    if gamma is None:
        gamma = associated_graph(s)
    used = {x.name for w in words for x in w}
    edges = tuple(e for e in gamma.edges if e[0] in used)
    vertices = tuple(sorted({u for _, u, _ in edges} | {v for _, _, v in edges}))
    sub = GraphGamma(vertices, edges)
    if not used:
        logger.warning("No words to carry; carried subgraph is empty")
        return CarriedSubgraph(sub, False)
    proper = len(edges) < len(gamma.edges)
    return CarriedSubgraph(sub, proper and sub.betti < gamma.betti)


# --- Leaf sets ---


@dataclass(frozen=True)
class HalfLeaf:
    word: Word
    basepoint: Subtree

    @property
    def depth(self) -> int:
        return len(self.word)

    def key(self) -> tuple:
        return (self.basepoint.key(), self.word.key())

    def __str__(self):
        return f"<{self.word}>"


@dataclass(frozen=True)
class LeafSet:
    basepoint: Subtree
    halves: frozenset[HalfLeaf]
    pairs: frozenset[tuple[HalfLeaf, HalfLeaf]] = field(default_factory=frozenset)

    def __post_init__(self):
        for half in self.halves:
            if half.basepoint != self.basepoint:
                raise BasepointMismatch(f"half-leaf {half} is based at {half.basepoint}, not {self.basepoint}")
        for x, y in self.pairs:
            if x not in self.halves or y not in self.halves:
                raise BasepointMismatch(f"pair ({x}, {y}) uses a half-leaf outside the set")

    def to_dict(self) -> dict:
        return {
            "basepoint": str(self.basepoint),
            "halves": sorted(str(h) for h in self.halves),
            "pairs": sorted([str(x), str(y)] for x, y in self.pairs),
        }


def diagonal_closure(ls: LeafSet) -> LeafSet:
    """Closes the pairs under chaining and flips: every ordered pair of distinct halves in one class."""
    g = nx.Graph()
    g.add_edges_from(ls.pairs)
    closed = set(ls.pairs)
    for component in nx.connected_components(g):
        closed |= {(x, y) for x, y in itertools.permutations(component, 2)}
    return LeafSet(ls.basepoint, ls.halves, frozenset(closed))


def leaf_set_at(s: SystemOfIsometries, component: str, x: Point, depth: int) -> LeafSet:
    """Half-leaves of length ``depth`` leaving ``x``; pairs are halves leaving in different letters."""
    region = s.forest.component(component).region
    basepoint = convex_hull([x], region.tree)
    language = admissible_language(s, depth)
    halves = frozenset(
        HalfLeaf(w, basepoint)
        for w, path in language.items()
        if len(w) == depth and path.isometry.source == component and contains(path.domain, x)
    )
    pairs = frozenset((a, b) for a, b in itertools.permutations(halves, 2) if a.word[0] != b.word[0])
    return LeafSet(basepoint, halves, pairs)


# --- Minimality ---


@dataclass
class MinimalityReport:
    n: int
    R: int
    verdict: str
    witness: tuple[str, str] | None = None
    complexity: dict[int, int] = field(default_factory=dict)
    eventually_periodic: bool = False

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "R": self.R,
            "verdict": self.verdict,
            "witness": list(self.witness) if self.witness else None,
            "complexity": {str(k): v for k, v in sorted(self.complexity.items())},
            "eventually_periodic": self.eventually_periodic,
        }


def minimality_diagnostic(s: SystemOfIsometries, n: int, R: int, max_words: int = DEFAULT_MAX_WORDS) -> MinimalityReport:
    """Uniform recurrence at (n, R): each regular R-word contains each regular n-word, read either way."""
    if not 1 <= n <= R:
        raise ValueError(f"need 1 <= n <= R, got n={n}, R={R}")
    try:
        language = admissible_language(s, R, max_words)
    except BudgetExceeded as e:
        logger.warning(f"Minimality diagnostic inconclusive: {e}")
        return MinimalityReport(n, R, "INCONCLUSIVE")
    complexity = {m: len(regular_words(s, m, language)) for m in range(1, R + 1)}
    short = regular_words(s, n, language)
    long = regular_words(s, R, language)
    periodic = R >= 2 and complexity[R] == complexity[R - 1]
    if not long:
        return MinimalityReport(n, R, "INCONCLUSIVE", complexity=complexity, eventually_periodic=periodic)
    for w in long:
        seen = w.subwords(n) | w.inverse().subwords(n)
        for u in short:
            if u not in seen:
                return MinimalityReport(n, R, "FAIL", (str(w), str(u)), complexity, periodic)
    return MinimalityReport(n, R, "PASS", complexity=complexity, eventually_periodic=periodic)
