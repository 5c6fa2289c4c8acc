# isometry_systems/core/sysiso.py
"""Systems of isometries S = (F, A) on finite forests.

Only positive letters are stored; inverse letters are views built on demand by
swapping domain and image. Paths (reduced words) are composed with maximal
restrictions, so a word is admissible exactly when its composed domain is not
empty.
"""
import itertools
import logging
from dataclasses import dataclass, field, replace

import networkx as nx

from isometry_systems.core.errors import BudgetExceeded, InvalidSystem, PointNotInSubtree, UnreducedWord
from isometry_systems.core.forest import (
    Forest,
    ForestComponent,
    Point,
    Subtree,
    branch_points,
    contains,
    contains_subtree,
    convex_hull,
    intersect_subtrees,
    sort_points,
)

logger = logging.getLogger(__name__)

# --- Configuration ---
DEFAULT_MAX_WORDS = 200_000
INVERSE_SUFFIX = "^-1"
LANGUAGE_CACHE_SIZE = 16


@dataclass(frozen=True, order=True)
class Letter:
    """An element of A^{±1}."""

    name: str
    inverse: bool = False

    def inv(self) -> "Letter":
        return Letter(self.name, not self.inverse)

    def __str__(self):
        return f"{self.name}{INVERSE_SUFFIX}" if self.inverse else self.name

    @classmethod
    def parse(cls, token: str) -> "Letter":
        if token.endswith(INVERSE_SUFFIX):
            return cls(token[: -len(INVERSE_SUFFIX)], True)
        return cls(token)


@dataclass(frozen=True)
class Word:
    letters: tuple[Letter, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "letters", tuple(self.letters))
        for x, y in zip(self.letters, self.letters[1:]):
            if y == x.inv():
                raise UnreducedWord(f"word '{self}' is not reduced at {x}{y}")

    def __len__(self):
        return len(self.letters)

    def __iter__(self):
        return iter(self.letters)

    def __getitem__(self, index):
        if isinstance(index, slice):
            return Word(self.letters[index])
        return self.letters[index]

    def __str__(self):
        return " ".join(str(x) for x in self.letters)

    def key(self) -> tuple:
        return (len(self.letters), self.letters)

    def inverse(self) -> "Word":
        return Word(tuple(x.inv() for x in reversed(self.letters)))

    def append(self, letter: Letter) -> "Word":
        return Word(self.letters + (letter,))

    def subwords(self, n: int) -> set["Word"]:
        return {self[i : i + n] for i in range(len(self) - n + 1)}

    @classmethod
    def parse(cls, text: str) -> "Word":
        return cls(tuple(Letter.parse(t) for t in text.split()))


def _inverse_label(label: str) -> str:
    return label[: -len(INVERSE_SUFFIX)] if label.endswith(INVERSE_SUFFIX) else label + INVERSE_SUFFIX


def canonical_points(s: Subtree) -> list[Point]:
    """Extremal and branch points of a subtree."""
    return sort_points(set(s.generators) | set(branch_points(s)))


@dataclass(frozen=True)
class PartialIsometry:
    """An isometry ``domain -> image`` between subtrees of two forest components.

    The map is carried by ``anchors``: pairs covering every extremal and branch
    point of the domain. Any other point is located on an anchor segment and
    walked to in the target tree.
    """

    label: str
    source: str
    target: str
    domain: Subtree
    image: Subtree
    anchors: tuple[tuple[Point, Point], ...]

    def apply(self, p: Point) -> Point:
        for u, v in self.anchors:
            if u == p:
                return v
        if not contains(self.domain, p):
            raise PointNotInSubtree(f"{p} is outside the domain of {self.label}")
        tree = self.domain.tree
        for (ui, vi), (uj, vj) in itertools.combinations(self.anchors, 2):
            if tree.on_segment(p, ui, uj):
                return self.image.tree.walk(vi, vj, tree.distance(ui, p))
        raise PointNotInSubtree(f"{p} is not covered by the anchors of {self.label}")

    def apply_subtree(self, s: Subtree) -> Subtree:
        return convex_hull([self.apply(p) for p in s.generators], self.image.tree)

    def inverse(self) -> "PartialIsometry":
        anchors = tuple(sorted(((v, u) for u, v in self.anchors), key=lambda pair: (pair[0].key(), pair[1].key())))
        return PartialIsometry(
            label=_inverse_label(self.label),
            source=self.target,
            target=self.source,
            domain=self.image,
            image=self.domain,
            anchors=anchors,
        )

    def restrict(self, sub: Subtree) -> "PartialIsometry":
        """Maximal restriction to ``sub``, which must lie inside the domain."""
        if not contains_subtree(self.domain, sub):
            raise PointNotInSubtree(f"{sub} is not inside the domain of {self.label}")
        pairs = [(u, self.apply(u)) for u in canonical_points(sub)]
        return replace(
            self,
            domain=sub,
            image=convex_hull([v for _, v in pairs], self.image.tree),
            anchors=tuple(pairs),
        )

    def preimage(self, sub: Subtree) -> Subtree:
        return self.inverse().apply_subtree(sub)

    def rehome(self, source: str, target: str, label: str | None = None) -> "PartialIsometry":
        return replace(self, source=source, target=target, label=label or self.label)


def make_isometry(
    label: str,
    source: ForestComponent,
    target: ForestComponent,
    pairs: list[tuple[Point, Point]],
) -> PartialIsometry:
    """Builds a partial isometry from anchor pairs covering the extremal points of its domain.

    Missing branch-point anchors are completed by medians.
    """
    if not pairs:
        raise InvalidSystem(f"letter {label} has no anchors")
    domain = convex_hull([u for u, _ in pairs], source.tree)
    image = convex_hull([v for _, v in pairs], target.tree)
    mapping = {}
    for u, v in pairs:
        mapping.setdefault(u, v)
    listed = list(pairs)
    dom_tree, img_tree = source.tree, target.tree
    for m in branch_points(domain):
        if m in mapping:
            continue
        for a, b, c in itertools.combinations(domain.sorted_generators, 3):
            if dom_tree.median(a, b, c) == m:
                mapping[m] = img_tree.median(mapping[a], mapping[b], mapping[c])
                listed.append((m, mapping[m]))
                break
    anchors = tuple(sorted(set(listed), key=lambda pair: (pair[0].key(), pair[1].key())))
    return PartialIsometry(label, source.name, target.name, domain, image, anchors)


def identity_isometry(component: ForestComponent) -> PartialIsometry:
    pairs = tuple((p, p) for p in canonical_points(component.region))
    return PartialIsometry("1", component.name, component.name, component.region, component.region, pairs)


def compose(f: PartialIsometry, g: PartialIsometry) -> PartialIsometry | None:
    """``f`` then ``g``, maximally restricted; None when the composite is nowhere defined."""
    if f.target != g.source:
        return None
    meet = intersect_subtrees(f.image, g.domain)
    if meet is None:
        return None
    pre = f.preimage(meet)
    pairs = tuple((u, g.apply(f.apply(u))) for u in canonical_points(pre))
    return PartialIsometry(
        label=f"{f.label} {g.label}",
        source=f.source,
        target=g.target,
        domain=pre,
        image=convex_hull([v for _, v in pairs], g.image.tree),
        anchors=pairs,
    )


@dataclass(frozen=True)
class SystemOfIsometries:
    forest: Forest
    letters: tuple[PartialIsometry, ...]
    rank_hint: int | None = None
    field_radicand: int = 0

    def __post_init__(self):
        object.__setattr__(self, "letters", tuple(sorted(self.letters, key=lambda f: f.label)))

    def letter(self, name: str) -> PartialIsometry:
        for f in self.letters:
            if f.label == name:
                return f
        raise InvalidSystem(f"system has no letter '{name}'")

    def oriented(self, x: Letter) -> PartialIsometry:
        f = self.letter(x.name)
        return f.inverse() if x.inverse else f

    def alphabet(self) -> list[Letter]:
        return sorted(Letter(f.label, inv) for f in self.letters for inv in (False, True))

    def with_letters(self, letters, forest: Forest | None = None) -> "SystemOfIsometries":
        return replace(self, forest=forest or self.forest, letters=tuple(letters))


# --- Associated graph ---


@dataclass(frozen=True)
class GraphGamma:
    vertices: tuple[str, ...]
    edges: tuple[tuple[str, str, str], ...]  # (letter, source, target)

    def to_networkx(self) -> nx.MultiDiGraph:
        g = nx.MultiDiGraph()
        g.add_nodes_from(self.vertices)
        for name, u, v in self.edges:
            g.add_edge(u, v, key=name, letter=name)
        return g

    @property
    def components(self) -> int:
        return nx.number_weakly_connected_components(self.to_networkx()) if self.vertices else 0

    @property
    def connected(self) -> bool:
        return self.components == 1

    @property
    def betti(self) -> int:
        return len(self.edges) - len(self.vertices) + self.components

    def valence(self, vertex: str) -> int:
        return sum((u == vertex) + (v == vertex) for _, u, v in self.edges)

    def initial_letters(self, vertex: str) -> list[Letter]:
        """I(v): oriented letters leaving ``vertex``."""
        found = []
        for name, u, v in self.edges:
            if u == vertex:
                found.append(Letter(name))
            if v == vertex:
                found.append(Letter(name, True))
        return sorted(found)

    def origin(self, x: Letter) -> str:
        for name, u, v in self.edges:
            if name == x.name:
                return v if x.inverse else u
        raise InvalidSystem(f"graph has no edge '{x.name}'")


def associated_graph(s: SystemOfIsometries) -> GraphGamma:
    names = set(s.forest.names)
    for f in s.letters:
        if f.source not in names or f.target not in names:
            raise InvalidSystem(f"letter {f.label} joins unknown components {f.source} -> {f.target}")
    edges = tuple(sorted((f.label, f.source, f.target) for f in s.letters))
    return GraphGamma(vertices=tuple(s.forest.names), edges=edges)


# --- Validation ---


@dataclass
class LetterCheck:
    name: str
    violations: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations


@dataclass
class ValidationReport:
    letters: list[LetterCheck]
    duplicate_names: list[str]
    gamma_connected: bool
    betti: int | None

    @property
    def passed(self) -> bool:
        return not self.duplicate_names and all(check.passed for check in self.letters)

    def to_dict(self) -> dict:
        return {
            "verdict": "PASS" if self.passed else "FAIL",
            "duplicate_names": self.duplicate_names,
            "gamma_connected": self.gamma_connected,
            "betti": self.betti,
            "letters": {check.name: check.violations for check in self.letters},
        }


def _check_letter(s: SystemOfIsometries, f: PartialIsometry) -> LetterCheck:
    check = LetterCheck(f.label)
    for (ui, vi), (uj, vj) in itertools.combinations(f.anchors, 2):
        d_dom = f.domain.tree.distance(ui, uj)
        d_img = f.image.tree.distance(vi, vj)
        if d_dom != d_img:
            check.violations.append(
                f"IsometryViolation: d({ui},{uj}) = {d_dom} but d({vi},{vj}) = {d_img}"
            )
    for role, component_name, sub in (("domain", f.source, f.domain), ("image", f.target, f.image)):
        if component_name not in s.forest.names:
            check.violations.append(f"ContainmentViolation: {role} component '{component_name}' does not exist")
            continue
        region = s.forest.component(component_name).region
        if not contains_subtree(region, sub):
            check.violations.append(f"ContainmentViolation: {role} {sub} is not inside component '{component_name}'")
    return check


def validate_system(s: SystemOfIsometries) -> ValidationReport:
    labels = [f.label for f in s.letters]
    duplicates = sorted({name for name in labels if labels.count(name) > 1})
    checks = [_check_letter(s, f) for f in s.letters]
    try:
        gamma = associated_graph(s)
        connected, betti = gamma.connected, gamma.betti
    except InvalidSystem:
        connected, betti = False, None
    report = ValidationReport(checks, duplicates, connected, betti)
    if not report.passed:
        logger.warning(f"System failed validation: {report.to_dict()}")
    return report


# --- Paths and the admissible language ---


@dataclass(frozen=True)
class Path:
    """An admissible path with its composed partial isometry.

    The empty path carries one identity per forest component.
    """

    word: Word
    maps: tuple[PartialIsometry, ...]

    @property
    def identity(self) -> bool:
        return len(self.word) == 0

    @property
    def isometry(self) -> PartialIsometry:
        return self.maps[0]

    @property
    def domain(self) -> Subtree:
        return self.isometry.domain

    @property
    def nondegenerate(self) -> bool:
        return not self.domain.is_degenerate


def compose_path(s: SystemOfIsometries, w: Word) -> Path | None:
    if len(w) == 0:
        return Path(w, tuple(identity_isometry(c) for c in s.forest.components))
    current = s.oriented(w[0])
    for x in w.letters[1:]:
        current = compose(current, s.oriented(x))
        if current is None:
            return None
    return Path(w, (current,))


def extend_path(s: SystemOfIsometries, path: Path, x: Letter) -> Path | None:
    if path.identity:
        return compose_path(s, Word((x,)))
    if path.word[-1] == x.inv():
        raise UnreducedWord(f"cannot extend '{path.word}' by {x}")
    composed = compose(path.isometry, s.oriented(x))
    if composed is None:
        return None
    return Path(path.word.append(x), (composed,))


@dataclass
class _LanguageLevels:
    """Words grown so far for one system; ``frontier`` holds the paths of length ``depth``."""

    system: SystemOfIsometries
    words: dict[Word, Path] = field(default_factory=dict)
    frontier: list[Path] = field(default_factory=list)
    depth: int = 0

    @property
    def closed(self) -> bool:
        return self.depth > 0 and not self.frontier


_language_cache: dict[int, _LanguageLevels] = {}


def clear_language_cache() -> None:
    _language_cache.clear()


def _levels_for(s: SystemOfIsometries) -> _LanguageLevels:
    levels = _language_cache.get(id(s))
    if levels is not None and levels.system is s:
        return levels
    if len(_language_cache) >= LANGUAGE_CACHE_SIZE:
        _language_cache.pop(next(iter(_language_cache)))
    levels = _LanguageLevels(s)
    _language_cache[id(s)] = levels
    return levels


def _grow(levels: _LanguageLevels, max_words: int) -> None:
    """Extends every frontier path by one letter; the level is kept only if it fits the budget."""
    s = levels.system
    alphabet = s.alphabet()
    if levels.depth == 0:
        grown = [path for path in (compose_path(s, Word((x,))) for x in alphabet) if path is not None]
    else:
        grown = []
        for path in levels.frontier:
            for x in alphabet:
                if path.word[-1] == x.inv():
                    continue
                extended = extend_path(s, path, x)
                if extended is not None:
                    grown.append(extended)
    total = len(levels.words) + len(grown)
    if total > max_words:
        raise BudgetExceeded(f"admissible language exceeds {max_words} words at length {levels.depth + 1}")
    levels.words.update((path.word, path) for path in grown)
    levels.frontier = grown
    levels.depth += 1


def admissible_language(s: SystemOfIsometries, n: int, max_words: int = DEFAULT_MAX_WORDS) -> dict[Word, Path]:
    """All admissible reduced words of length 1..n, by length then letter order.

    Words are grown from the deepest level already computed for ``s``, so
    asking for increasing depths on one system only composes the new letters.
    """
    if n < 0:
        raise ValueError(f"depth must be non-negative, got {n}")
    levels = _levels_for(s)
    while levels.depth < n and not levels.closed:
        _grow(levels, max_words)
    if n >= levels.depth:
        language = dict(levels.words)
    else:
        language = {w: path for w, path in levels.words.items() if len(w) <= n}
    if len(language) > max_words:
        raise BudgetExceeded(f"admissible language exceeds {max_words} words at length {n}")
    return language


def words_of_length(language: dict[Word, Path], n: int) -> list[Word]:
    return [w for w in language if len(w) == n]
