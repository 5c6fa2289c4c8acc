# isometry_systems/cli/document.py
"""The line-based system document.

    field quadratic 5
    rank 2
    tree I
    vertex l
    vertex r
    edge l r 1+1*sqrt(5)
    component I on I
    region l r
    letter a I I
    domain l l~r@1
    image l~r@1/2+1/2*sqrt(5) r
    anchor l -> l~r@1/2+1/2*sqrt(5)
    anchor l~r@1 -> r

An ``iet`` block (``lengths = [...]``, ``permutation = [...]``, optional
``labels = [...]``) may stand in for the forest and letters. Lines starting with
``#`` are comments. ``emit_system`` writes the canonical form, which parses back
to an equal system.
"""
import logging
import re
from dataclasses import dataclass, field

from isometry_systems.core.errors import IsometryError, ParseError
from isometry_systems.core.forest import Forest, ForestComponent, MetricTree, Point, build_tree, convex_hull, whole_tree
from isometry_systems.core.iet import IntervalExchange, iet_to_system
from isometry_systems.core.scalar import Scalar
from isometry_systems.core.sysiso import SystemOfIsometries, make_isometry

logger = logging.getLogger(__name__)

_LIST_RE = re.compile(r"^(?P<key>lengths|permutation|labels)\s*=\s*\[(?P<body>.*)\]\s*;?\s*$")


@dataclass
class _TreeDraft:
    line: int
    vertices: list[str] = field(default_factory=list)
    edges: list[tuple[str, str, Scalar]] = field(default_factory=list)


@dataclass
class _ComponentDraft:
    line: int
    tree: str
    region: list[tuple[str, int]] = field(default_factory=list)


@dataclass
class _LetterDraft:
    line: int
    source: str
    target: str
    anchors: list[tuple[str, str, int]] = field(default_factory=list)
    domain: tuple[list[str], int] | None = None
    image: tuple[list[str], int] | None = None


@dataclass
class _Document:
    radicand: int = 0
    rank: int | None = None
    trees: dict[str, _TreeDraft] = field(default_factory=dict)
    components: dict[str, _ComponentDraft] = field(default_factory=dict)
    letters: dict[str, _LetterDraft] = field(default_factory=dict)
    iet: dict[str, tuple[list[str], int]] = field(default_factory=dict)


def _scalar(token: str, doc: _Document, line: int, name: str) -> Scalar:
    try:
        value = Scalar.parse(token, doc.radicand or None)
    except ValueError as e:
        raise ParseError(str(e), line, name) from e
    if value.radicand and not doc.radicand:
        raise ParseError(f"'{token}' is irrational but the field is rational", line, name)
    return value


def _read(text: str) -> _Document:
    doc = _Document()
    tree = component = letter = None
    in_iet = False
    for number, raw in enumerate(text.splitlines(), start=1):
        content = raw.split("#", 1)[0].strip()
        if not content:
            continue
        if in_iet:
            match = _LIST_RE.match(content)
            if match:
                items = [item.strip() for item in match.group("body").split(",") if item.strip()]
                doc.iet[match.group("key")] = (items, number)
                continue
            in_iet = False
        words = content.split()
        keyword, args = words[0], words[1:]
        if keyword == "field":
            if args == ["rational"]:
                doc.radicand = 0
            elif len(args) == 2 and args[0] == "quadratic" and args[1].removeprefix("d=").isdigit():
                doc.radicand = int(args[1].removeprefix("d="))
            else:
                raise ParseError(f"expected 'field rational' or 'field quadratic <d>', got '{content}'", number, "field")
        elif keyword == "rank" and len(args) == 1 and args[0].isdigit():
            doc.rank = int(args[0])
        elif keyword == "tree" and len(args) == 1:
            tree = doc.trees.setdefault(args[0], _TreeDraft(number))
            component = letter = None
        elif keyword == "vertex" and tree is not None and len(args) == 1:
            tree.vertices.append(args[0])
        elif keyword == "edge" and tree is not None and len(args) >= 3:
            tree.edges.append((args[0], args[1], _scalar("".join(args[2:]), doc, number, "length")))
        elif keyword == "component" and len(args) == 3 and args[1] == "on":
            if args[0] in doc.components:
                raise ParseError(f"component '{args[0]}' declared twice", number, "component")
            component = doc.components[args[0]] = _ComponentDraft(number, args[2])
            tree = letter = None
        elif keyword == "region" and component is not None:
            component.region.extend((token, number) for token in args)
        elif keyword == "letter" and len(args) == 3:
            if args[0] in doc.letters:
                raise ParseError(f"letter '{args[0]}' declared twice", number, "letter")
            letter = doc.letters[args[0]] = _LetterDraft(number, args[1], args[2])
            tree = component = None
        elif keyword in ("domain", "image") and letter is not None:
            setattr(letter, keyword, (args, number))
        elif keyword == "anchor" and letter is not None and len(args) == 3 and args[1] == "->":
            letter.anchors.append((args[0], args[2], number))
        elif keyword == "iet" and not args:
            in_iet = True
        else:
            raise ParseError(f"unexpected line '{content}'", number, keyword)
    return doc


def _point(token: str, tree: MetricTree, doc: _Document, line: int) -> Point:
    try:
        if "~" not in token:
            return tree.point(token)
        ends, _, offset = token.partition("@")
        u, _, v = ends.partition("~")
        return tree.point(u, v, _scalar(offset, doc, line, "point"))
    except IsometryError as e:
        if isinstance(e, ParseError):
            raise
        raise ParseError(str(e), line, "point") from e


def _build_iet(doc: _Document) -> IntervalExchange:
    if "lengths" not in doc.iet or "permutation" not in doc.iet:
        raise ParseError("an iet block needs 'lengths' and 'permutation'", None, "iet")
    tokens, line = doc.iet["lengths"]
    lengths = [_scalar(token, doc, line, "lengths") for token in tokens]
    tokens, line = doc.iet["permutation"]
    if not all(token.isdigit() for token in tokens):
        raise ParseError(f"permutation entries must be positive integers: {tokens}", line, "permutation")
    labels = doc.iet.get("labels", (None, None))[0]
    try:
        return IntervalExchange.from_permutation(lengths, [int(t) for t in tokens], labels)
    except IsometryError as e:
        raise ParseError(str(e), line, "iet") from e


def parse_iet(text: str) -> IntervalExchange:
    doc = _read(text)
    if not doc.iet:
        raise ParseError("document has no iet block")
    return _build_iet(doc)


def parse_system(text: str) -> SystemOfIsometries:
    doc = _read(text)
    if doc.iet:
        s = iet_to_system(_build_iet(doc))
        if doc.rank is not None:
            s = SystemOfIsometries(s.forest, s.letters, doc.rank, s.field_radicand)
        return s

    trees = {}
    for name, draft in doc.trees.items():
        try:
            trees[name] = build_tree(name, draft.vertices, draft.edges)
        except IsometryError as e:
            raise ParseError(str(e), draft.line, "tree") from e

    components = {}
    for name, draft in doc.components.items():
        if draft.tree not in trees:
            raise ParseError(f"component '{name}' refers to unknown tree '{draft.tree}'", draft.line, "component")
        tree = trees[draft.tree]
        if draft.region:
            points = [_point(token, tree, doc, line) for token, line in draft.region]
            region = convex_hull(points, tree)
        else:
            region = whole_tree(tree)
        components[name] = ForestComponent(name, region)
    if not components:
        raise ParseError("document declares no components", None, "component")

    letters = []
    for name, draft in doc.letters.items():
        for role in (draft.source, draft.target):
            if role not in components:
                raise ParseError(f"letter '{name}' refers to unknown component '{role}'", draft.line, "letter")
        source, target = components[draft.source], components[draft.target]
        pairs = [
            (_point(u, source.tree, doc, line), _point(v, target.tree, doc, line)) for u, v, line in draft.anchors
        ]
        if not pairs:
            raise ParseError(f"letter '{name}' has no anchors", draft.line, "anchor")
        f = make_isometry(name, source, target, pairs)
        for role, declared, actual, tree in (
            ("domain", draft.domain, f.domain, source.tree),
            ("image", draft.image, f.image, target.tree),
        ):
            if declared is None:
                continue
            tokens, line = declared
            expected = convex_hull([_point(token, tree, doc, line) for token in tokens], tree)
            if expected != actual:
                raise ParseError(f"declared {role} {expected} differs from the anchor hull {actual}", line, role)
        letters.append(f)

    s = SystemOfIsometries(Forest(tuple(components.values())), tuple(letters), doc.rank, doc.radicand)
    logger.info(f"Parsed system with {len(components)} components and {len(letters)} letters")
    return s


def emit_system(s: SystemOfIsometries) -> str:
    lines = ["# system of isometries"]
    lines.append(f"field quadratic {s.field_radicand}" if s.field_radicand else "field rational")
    if s.rank_hint is not None:
        lines.append(f"rank {s.rank_hint}")
    for name, tree in sorted(s.forest.trees().items()):
        lines.append("")
        lines.append(f"tree {name}")
        lines.extend(f"vertex {v}" for v in tree.vertices)
        lines.extend(f"edge {e.tail} {e.head} {e.length}" for e in tree.edges)
    for c in s.forest.components:
        lines.append("")
        lines.append(f"component {c.name} on {c.tree.name}")
        lines.append("region " + " ".join(str(p) for p in c.region.sorted_generators))
    for f in s.letters:
        lines.append("")
        lines.append(f"letter {f.label} {f.source} {f.target}")
        lines.append("domain " + " ".join(str(p) for p in f.domain.sorted_generators))
        lines.append("image " + " ".join(str(p) for p in f.image.sorted_generators))
        lines.extend(f"anchor {u} -> {v}" for u, v in f.anchors)
    return "\n".join(lines) + "\n"


def emit_iet(e: IntervalExchange) -> str:
    radicand = e.radicand
    lines = [
        "# interval exchange",
        f"field quadratic {radicand}" if radicand else "field rational",
        "iet",
        "lengths = [" + ", ".join(str(e.lengths[label]) for label in e.top) + "]",
        "permutation = [" + ", ".join(str(p) for p in e.permutation) + "]",
        "labels = [" + ", ".join(e.top) + "]",
    ]
    return "\n".join(lines) + "\n"


def parse_point(token: str, tree: MetricTree, radicand: int = 0) -> Point:
    """Parses ``v`` or ``u~v@offset`` on ``tree``."""
    return _point(token, tree, _Document(radicand=radicand), None)
