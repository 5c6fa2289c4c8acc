# isometry_systems/core/induction.py
"""The Rips machine and generalized Rauzy-Veech splitting.

Every step returns an ``InductionStep`` whose ``fold_map`` sends the output
graph back to the input graph, so composite maps down to the starting graph are
obtained by path substitution.
"""
import logging
from dataclasses import dataclass, field
from typing import Literal

from isometry_systems.core.errors import EmptyOutput, NotASplittingPoint
from isometry_systems.core.forest import (
    Direction,
    Forest,
    ForestComponent,
    Point,
    Subtree,
    branch_points,
    contains,
    convex_hull,
    hull_directions,
    intersect_subtrees,
    is_extremal,
    meets_direction,
    merge_subtrees,
    subtree_diameter,
)
from isometry_systems.core.scalar import ZERO
from isometry_systems.core.sysiso import (
    GraphGamma,
    Letter,
    PartialIsometry,
    SystemOfIsometries,
    Word,
    associated_graph,
    compose,
)

logger = logging.getLogger(__name__)

# --- Configuration ---
LEVITT_WINDOW = 10
LEVITT_MIN_GROWTH_STEPS = 9
LEVITT_MIN_SHRINK_FACTOR = 2

Policy = Literal["all", "rauzy"]


def fresh_names(base: str, taken, count: int) -> list[str]:
    """``count`` names ``root.k`` not in ``taken``; ``root`` is ``base`` up to its first dot."""
    root = base.split(".")[0]
    names, k = [], 1
    while len(names) < count:
        candidate = f"{root}.{k}"
        if candidate not in taken:
            names.append(candidate)
        k += 1
    return names


def free_reduce(letters) -> Word:
    stack: list[Letter] = []
    for x in letters:
        if stack and stack[-1] == x.inv():
            stack.pop()
        else:
            stack.append(x)
    return Word(tuple(stack))


@dataclass(frozen=True)
class GraphMap:
    """A graph morphism given by vertex images and edge-path images."""

    vertex_images: dict[str, str]
    edge_images: dict[str, Word]

    def image_of_letter(self, x: Letter) -> Word:
        image = self.edge_images[x.name]
        return image.inverse() if x.inverse else image

    def image_of_word(self, w: Word) -> Word:
        letters = []
        for x in w:
            letters.extend(self.image_of_letter(x).letters)
        return free_reduce(letters)

    def then(self, other: "GraphMap") -> "GraphMap":
        """This map followed by ``other``."""
        return GraphMap(
            vertex_images={v: other.vertex_images[w] for v, w in self.vertex_images.items()},
            edge_images={e: other.image_of_word(w) for e, w in self.edge_images.items()},
        )

    @classmethod
    def identity(cls, gamma: GraphGamma) -> "GraphMap":
        return cls(
            vertex_images={v: v for v in gamma.vertices},
            edge_images={name: Word((Letter(name),)) for name, _, _ in gamma.edges},
        )

    def to_dict(self) -> dict:
        return {
            "vertices": dict(sorted(self.vertex_images.items())),
            "edges": {e: str(w) for e, w in sorted(self.edge_images.items())},
        }


@dataclass(frozen=True)
class SplittingPoint:
    component: str
    x: Point
    direction: Direction
    a0: Letter
    a1: Letter

    def key(self) -> tuple:
        return (self.component, self.x.key(), self.a0)

    def to_dict(self) -> dict:
        return {
            "component": self.component,
            "point": str(self.x),
            "direction": str(self.direction),
            "a0": str(self.a0),
            "a1": str(self.a1),
        }


@dataclass
class InductionStep:
    kind: Literal["rips", "split"]
    input: SystemOfIsometries
    output: SystemOfIsometries
    fold_map: GraphMap
    split_data: list[SplittingPoint] = field(default_factory=list)
    halted: bool = False
    dropped: list[str] = field(default_factory=list)
    interfering: list[str] = field(default_factory=list)
    pieces: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "halted": self.halted,
            "components": self.output.forest.names,
            "letters": [f.label for f in self.output.letters],
            "fold_map": self.fold_map.to_dict(),
            "split_data": [p.to_dict() for p in self.split_data],
            "dropped": self.dropped,
            "interfering": self.interfering,
        }


# --- Rips machine ---


def _restrict_between(f: PartialIsometry, source: ForestComponent, target: ForestComponent) -> PartialIsometry | None:
    """Maximal restriction of ``f`` to points of ``source`` sent into ``target``."""
    on_source = intersect_subtrees(f.domain, source.region)
    reached = intersect_subtrees(f.image, target.region)
    if on_source is None or reached is None:
        return None
    domain = intersect_subtrees(on_source, f.preimage(reached))
    if domain is None:
        return None
    return f.restrict(domain).rehome(source.name, target.name)


def rips_step(s: SystemOfIsometries) -> InductionStep:
    """Keeps the points lying in two letter domains and maximally restricts every letter."""
    alphabet = s.alphabet()
    isometries = {x: s.oriented(x) for x in alphabet}
    pieces: dict[str, list[ForestComponent]] = {}
    taken = set(s.forest.names)
    for c in s.forest.components:
        overlaps = []
        local = [x for x in alphabet if isometries[x].source == c.name]
        for i, x in enumerate(local):
            for y in local[i + 1 :]:
                meet = intersect_subtrees(isometries[x].domain, isometries[y].domain)
                if meet is not None:
                    overlaps.append(meet)
        groups = merge_subtrees(overlaps)
        if len(groups) == 1:
            pieces[c.name] = [ForestComponent(c.name, groups[0])]
        else:
            names = fresh_names(c.name, taken, len(groups))
            taken.update(names)
            pieces[c.name] = [ForestComponent(name, g) for name, g in zip(names, groups)]

    if not any(pieces.values()):
        raise EmptyOutput("no point of the forest lies in two letter domains")

    gamma = associated_graph(s)
    halted = all(
        len(pieces[c.name]) == 1 and pieces[c.name][0].region == c.region for c in s.forest.components
    )
    if halted:
        logger.info("Rips machine halted: every point lies in two domains")
        return InductionStep("rips", s, s, GraphMap.identity(gamma), halted=True)

    letters, dropped, edge_images = [], [], {}
    labels = {f.label for f in s.letters}
    for f in s.letters:
        restricted = []
        for p in pieces[f.source]:
            for q in pieces[f.target]:
                g = _restrict_between(f, p, q)
                if g is not None:
                    restricted.append(g)
        if not restricted:
            dropped.append(f.label)
            continue
        if len(restricted) > 1:
            names = fresh_names(f.label, labels, len(restricted))
            labels.update(names)
            restricted = [g.rehome(g.source, g.target, name) for g, name in zip(restricted, names)]
        for g in restricted:
            letters.append(g)
            edge_images[g.label] = Word((Letter(f.label),))

    components = [piece for group in pieces.values() for piece in group]
    vertex_images = {piece.name: c_name for c_name, group in pieces.items() for piece in group}
    output = s.with_letters(letters, forest=Forest(tuple(components)))
    if dropped:
        logger.info(f"Rips step dropped letters with empty restrictions: {dropped}")
    return InductionStep("rips", s, output, GraphMap(vertex_images, edge_images), dropped=dropped)


# --- Splitting ---


def find_splitting_points(s: SystemOfIsometries) -> list[SplittingPoint]:
    """Candidates are the extremal points of non-degenerate bases."""
    alphabet = s.alphabet()
    isometries = {x: s.oriented(x) for x in alphabet}
    found = []
    for a0 in alphabet:
        base = isometries[a0].domain
        if base.is_degenerate:
            continue
        component = isometries[a0].source
        region = s.forest.component(component).region
        for x in base.sorted_generators:
            if len(hull_directions(region, x)) < 2:
                continue
            d_x = hull_directions(base, x)[0]
            others = [
                y
                for y in alphabet
                if y != a0
                and isometries[y].source == component
                and contains(isometries[y].domain, x)
                and meets_direction(isometries[y].domain, d_x)
            ]
            if len(others) != 1:
                continue
            a1 = others[0]
            if is_extremal(x, isometries[a1].domain):
                continue
            found.append(SplittingPoint(component, x, d_x, a0, a1))
    return sorted(found, key=SplittingPoint.key)


def _side(sub: Subtree, near: ForestComponent, far: ForestComponent) -> ForestComponent | None:
    if all(contains(far.region, g) for g in sub.generators):
        return far
    if all(contains(near.region, g) for g in sub.generators):
        return near
    return None


def _cut(f: PartialIsometry, sub: Subtree, near: ForestComponent, far: ForestComponent, on_image: bool):
    """Pieces of ``f`` with ``sub`` (its domain or image) placed on one side each."""
    side = _side(sub, near, far)
    if side is not None:
        return [(f, side)]
    pieces = []
    for part in (near, far):
        meet = intersect_subtrees(sub, part.region)
        restricted = f.restrict(f.preimage(meet)) if on_image else f.restrict(meet)
        pieces.append((restricted, part))
    return pieces


def split_at(s: SystemOfIsometries, p: SplittingPoint) -> InductionStep:
    """Cuts the component of ``p`` into the closed splitting direction and the rest.

    Both new components and every cut letter get fresh ``root.k`` names. The
    fold map zips the two copies of the point back together: it sends each
    regular admissible word of the output to an admissible word of the input.
    A word passing through the duplicated point alone, such as ``b.1^-1 b.2``
    across the cut, may reduce to the empty word.
    """
    if p not in find_splitting_points(s):
        raise NotASplittingPoint(f"{p.x} in '{p.component}' with base {p.a0} is not a splitting point")
    c = s.forest.component(p.component)
    tree = c.tree
    inside = {g for g in c.region.generators if tree.in_direction(p.direction, g)}
    outside = set(c.region.generators) - inside - {p.x}
    near_name, far_name = fresh_names(c.name, set(s.forest.names), 2)
    near = ForestComponent(near_name, convex_hull(inside | {p.x}, tree))
    far = ForestComponent(far_name, convex_hull(outside | {p.x}, tree))

    letters, edge_images = [], {}
    labels = {f.label for f in s.letters}
    for f in s.letters:
        pieces = []
        by_domain = _cut(f, f.domain, near, far, False) if f.source == c.name else [(f, None)]
        for piece, dom_side in by_domain:
            by_image = _cut(piece, piece.image, near, far, True) if f.target == c.name else [(piece, None)]
            for final, img_side in by_image:
                source = dom_side.name if dom_side else f.source
                target = img_side.name if img_side else f.target
                pieces.append(final.rehome(source, target))
        names = [f.label] if len(pieces) == 1 else fresh_names(f.label, labels, len(pieces))
        labels.update(names)
        for piece, name in zip(pieces, names):
            letters.append(piece.rehome(piece.source, piece.target, name))
            edge_images[name] = Word((Letter(f.label),))

    components = [comp for comp in s.forest.components if comp.name != c.name] + [near, far]
    vertex_images = {comp.name: comp.name for comp in s.forest.components if comp.name != c.name}
    vertex_images.update({near.name: c.name, far.name: c.name})
    output = s.with_letters(letters, forest=Forest(tuple(components)))
    logger.info(f"Split '{c.name}' at {p.x} toward {p.direction.toward} into '{near.name}' and '{far.name}'")
    return InductionStep(
        "split", s, output, GraphMap(vertex_images, edge_images), split_data=[p], pieces=(near.name, far.name)
    )


def is_segment_system(s: SystemOfIsometries) -> bool:
    """One component without branch points, the shape of an interval exchange."""
    return len(s.forest.components) == 1 and not branch_points(s.forest.components[0].region)


def split_all(s: SystemOfIsometries, classical_on_segments: bool = True) -> InductionStep:
    """Splits every splitting point, one per (component, point), in canonical order.

    On a single segment the step is the classical one instead: split the
    rightmost singularity and zip the new bivalent piece back
    (``rauzy_split``), so one step matches one Rauzy-Veech step.
    """
    points = find_splitting_points(s)
    gamma = associated_graph(s)
    if not points:
        return InductionStep("split", s, s, GraphMap.identity(gamma))
    if classical_on_segments and is_segment_system(s):
        step = rauzy_split(s)
        if step.split_data:
            return step
        logger.info("No splitting point directed away from the segment start; splitting all points")
    targets, interfering, seen = [], [], set()
    for p in points:
        place = (p.component, p.x)
        if place in seen:
            interfering.append(f"{p.component}:{p.x} (base {p.a0})")
            continue
        seen.add(place)
        targets.append((s.forest.component(p.component).tree.name, p))

    current, fold, applied = s, GraphMap.identity(gamma), []
    for host, wanted in targets:
        matches = [
            q
            for q in find_splitting_points(current)
            if current.forest.component(q.component).tree.name == host
            and q.x == wanted.x
            and q.direction == wanted.direction
        ]
        if not matches:
            interfering.append(f"{wanted.component}:{wanted.x} (no longer splitting)")
            continue
        step = split_at(current, matches[0])
        fold = step.fold_map.then(fold)
        current = step.output
        applied.append(matches[0])
    if interfering:
        logger.warning(f"Interfering splits resolved sequentially: {interfering}")
    return InductionStep("split", s, current, fold, split_data=applied, interfering=interfering)


def select_rauzy_point(s: SystemOfIsometries, points: list[SplittingPoint]) -> SplittingPoint | None:
    """The splitting point farthest from its region's first generator, directed away from it."""
    for component in s.forest.names:
        region = s.forest.component(component).region
        start = region.sorted_generators[0]
        tree = region.tree
        candidates = [
            p
            for p in points
            if p.component == component and p.x != start and not tree.in_direction(p.direction, start)
        ]
        if candidates:
            return max(candidates, key=lambda p: tree.distance(start, p.x))
    return None


def _absorb(split: InductionStep, original: str, a0_name: str) -> InductionStep:
    """Composes away the bivalent near piece and gives the far piece back the name ``original``."""
    s1 = split.output
    near, far = split.pieces
    incident = [f for f in s1.letters if near in (f.source, f.target)]
    if len(incident) != 2 or any(f.source == f.target == near for f in incident):
        logger.warning(f"Component '{near}' is not bivalent; keeping the plain split")
        return split
    first, second = sorted(incident, key=lambda f: (f.target != near, f.label))
    u = Letter(first.label, first.target != near)
    v = Letter(second.label, second.source != near)
    composite = compose(s1.oriented(u), s1.oriented(v))
    if composite is None:
        logger.warning(f"Letters around '{near}' do not compose; keeping the plain split")
        return split

    parents = {name: w[0].name for name, w in split.fold_map.edge_images.items()}
    survivors = [f for f in s1.letters if f.label not in (u.name, v.name)]
    counts = {}
    for f in survivors:
        counts[parents[f.label]] = counts.get(parents[f.label], 0) + 1

    def rename(comp: str) -> str:
        return original if comp == far else comp

    letters, edge_images = [], {}
    for f in survivors:
        label = parents[f.label] if counts[parents[f.label]] == 1 and parents[f.label] != a0_name else f.label
        letters.append(f.rehome(rename(f.source), rename(f.target), label))
        edge_images[label] = split.fold_map.edge_images[f.label]
    letters.append(composite.rehome(rename(composite.source), rename(composite.target), a0_name))
    edge_images[a0_name] = free_reduce(
        split.fold_map.image_of_letter(u).letters + split.fold_map.image_of_letter(v).letters
    )

    components = [c for c in s1.forest.components if c.name not in (near, far)]
    components.append(ForestComponent(original, s1.forest.component(far).region))
    vertex_images = {c.name: split.fold_map.vertex_images[c.name] for c in s1.forest.components if c.name not in (near, far)}
    vertex_images[original] = original
    output = s1.with_letters(letters, forest=Forest(tuple(components)))
    return InductionStep("split", split.input, output, GraphMap(vertex_images, edge_images), split_data=split.split_data)


def rauzy_split(s: SystemOfIsometries) -> InductionStep:
    """One classical-style step: split at the extreme splitting point, then absorb the new piece."""
    points = find_splitting_points(s)
    chosen = select_rauzy_point(s, points)
    if chosen is None:
        return InductionStep("split", s, s, GraphMap.identity(associated_graph(s)))
    split = split_at(s, chosen)
    return _absorb(split, chosen.component, chosen.a0.name)


# --- Surface directions ---


@dataclass
class DirectionCount:
    component: str
    point: Point
    direction: Direction
    letters: list[Letter]

    def to_dict(self) -> dict:
        return {
            "component": self.component,
            "point": str(self.point),
            "direction": str(self.direction),
            "letters": [str(x) for x in self.letters],
        }


@dataclass
class DirectionReport:
    counts: list[DirectionCount]

    @property
    def failures(self) -> list[DirectionCount]:
        return [c for c in self.counts if len(c.letters) != 2]

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict:
        return {
            "verdict": "PASS" if self.passed else "FAIL",
            "examined": len(self.counts),
            "failures": [c.to_dict() for c in self.failures],
        }


def check_surface_directions(s: SystemOfIsometries) -> DirectionReport:
    """Counts letters defined at x and meeting d, for branch points and base-extremal points."""
    alphabet = s.alphabet()
    isometries = {x: s.oriented(x) for x in alphabet}
    counts = []
    for c in s.forest.components:
        local = [x for x in alphabet if isometries[x].source == c.name]
        points = set(branch_points(c.region))
        for x in local:
            points |= set(isometries[x].domain.generators)
        for point in sorted(points, key=Point.key):
            for d in hull_directions(c.region, point):
                defined = [
                    y
                    for y in local
                    if contains(isometries[y].domain, point) and meets_direction(isometries[y].domain, d)
                ]
                counts.append(DirectionCount(c.name, point, d, defined))
    return DirectionReport(counts)


# --- Runs ---


@dataclass
class HomotopyCertificate:
    betti: int
    betti_start: int
    low_valence: list[str]
    high_valence_count: int
    bound: int | None

    @property
    def passed(self) -> bool:
        within = self.bound is None or self.high_valence_count <= self.bound
        return self.betti == self.betti_start and not self.low_valence and within

    def to_dict(self) -> dict:
        return {
            "betti": self.betti,
            "betti_start": self.betti_start,
            "low_valence": self.low_valence,
            "high_valence_count": self.high_valence_count,
            "bound": self.bound,
            "passed": self.passed,
        }


def homotopy_certificate(gamma: GraphGamma, gamma_start: GraphGamma) -> HomotopyCertificate:
    """b1 against the start graph, valence 0/1 vertices, and the 2N-2 bound for rose starts."""
    bound = 2 * len(gamma_start.edges) - 2 if len(gamma_start.vertices) == 1 else None
    return HomotopyCertificate(
        betti=gamma.betti,
        betti_start=gamma_start.betti,
        low_valence=[v for v in gamma.vertices if gamma.valence(v) <= 1],
        high_valence_count=sum(1 for v in gamma.vertices if gamma.valence(v) >= 3),
        bound=bound,
    )


def component_metrics(s: SystemOfIsometries) -> tuple[int, object]:
    diameters = [subtree_diameter(c.region) for c in s.forest.components]
    return len(diameters), max(diameters, default=ZERO)


def classify_levitt(metrics: list[tuple[int, object]]) -> str:
    """LevittEvidence when components keep multiplying while the largest one shrinks."""
    if len(metrics) < LEVITT_WINDOW + 1:
        return "Unknown"
    window = metrics[-(LEVITT_WINDOW + 1) :]
    growth = sum(1 for (before, _), (after, _) in zip(window, window[1:]) if after > before)
    start_diameter, end_diameter = metrics[0][1], metrics[-1][1]
    if growth >= LEVITT_MIN_GROWTH_STEPS and end_diameter * LEVITT_MIN_SHRINK_FACTOR <= start_diameter:
        return "LevittEvidence"
    return "Unknown"


@dataclass
class InductionHistory:
    steps: list[InductionStep]
    classification: Literal["Surface", "LevittEvidence", "Unknown"]
    policy: str
    max_steps: int
    budget_exhausted: bool = False
    halted_at: int | None = None
    stop_reason: str | None = None
    metrics: list[tuple[int, object]] = field(default_factory=list)

    @property
    def final(self) -> SystemOfIsometries | None:
        return self.steps[-1].output if self.steps else None

    def certificates(self) -> list[HomotopyCertificate]:
        if not self.steps:
            return []
        start = associated_graph(self.steps[0].input)
        return [homotopy_certificate(associated_graph(step.output), start) for step in self.steps]

    def to_dict(self) -> dict:
        return {
            "classification": self.classification,
            "policy": self.policy,
            "max_steps": self.max_steps,
            "steps_used": len(self.steps),
            "budget_exhausted": self.budget_exhausted,
            "halted_at": self.halted_at,
            "stop_reason": self.stop_reason,
            "metrics": [[count, str(diameter)] for count, diameter in self.metrics],
            "steps": [step.to_dict() for step in self.steps],
            "certificates": [c.to_dict() for c in self.certificates()],
        }


def run_induction(
    s: SystemOfIsometries,
    max_steps: int,
    policy: Policy = "all",
    max_components: int | None = None,
) -> InductionHistory:
    """Rips steps until the machine halts, then splitting steps; all within ``max_steps``."""
    history = InductionHistory([], "Unknown", policy, max_steps, metrics=[component_metrics(s)])
    current = s
    while len(history.steps) < max_steps:
        try:
            step = rips_step(current)
        except EmptyOutput as e:
            logger.warning(f"Rips machine emptied the forest after {len(history.steps)} steps: {e}")
            history.stop_reason = "empty-output"
            return history
        history.steps.append(step)
        current = step.output
        if step.halted:
            history.halted_at = len(history.steps) - 1
            history.classification = "Surface"
            break
        history.metrics.append(component_metrics(current))
        if max_components is not None and len(current.forest.components) > max_components:
            history.stop_reason = "max-components"
            history.budget_exhausted = True
            break

    if history.halted_at is None:
        if history.stop_reason is None and len(history.steps) >= max_steps:
            history.budget_exhausted = True
            history.stop_reason = "max-steps"
        history.classification = classify_levitt(history.metrics)
        logger.info(f"Rips machine did not halt within budget; classification {history.classification}")
        return history

    splitter = rauzy_split if policy == "rauzy" else split_all
    while len(history.steps) < max_steps:
        step = splitter(current)
        if not step.split_data:
            history.stop_reason = "no-splitting-points"
            return history
        history.steps.append(step)
        current = step.output
    history.budget_exhausted = True
    history.stop_reason = "max-steps"
    return history
