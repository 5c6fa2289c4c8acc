import argparse
import logging
from pathlib import Path

from isometry_systems.cli.document import emit_iet, emit_system, parse_iet, parse_point, parse_system
from isometry_systems.cli.utils import (
    direction_graph_to_dot,
    gamma_to_dot,
    orbit_to_dot,
    whitehead_to_dot,
    write_report,
    write_text,
)
from isometry_systems.core.errors import KeaneViolation, UsageError
from isometry_systems.core.forest import Point, branch_points, sort_points
from isometry_systems.core.iet import compare_inductions, iet_to_system, keane_check, rauzy_sequence
from isometry_systems.core.indices import index_bound_report, orbit_graphs
from isometry_systems.core.induction import (
    find_splitting_points,
    rips_step,
    run_induction,
    split_all,
)
from isometry_systems.core.lamination import (
    carried_subgraph,
    diagonal_closure,
    leaf_set_at,
    legal_turns,
    minimality_diagnostic,
    regular_words,
    whitehead_report,
)
from isometry_systems.core.schemas import RunConfig
from isometry_systems.core.sysiso import SystemOfIsometries, admissible_language, associated_graph, validate_system

logger = logging.getLogger(__name__)

# --- Exit codes ---
EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_ERROR = 2


def _load_system(args: argparse.Namespace) -> SystemOfIsometries:
    text = Path(args.document).read_text(encoding="utf-8")
    s = parse_system(text)
    if args.field is not None and s.field_radicand != args.field:
        raise UsageError(f"--field asks for radicand {args.field} but the document uses {s.field_radicand}")
    return s


def _finish(args, config: RunConfig, name: str, payload: dict, verdict: str | None = None) -> int:
    payload["config"] = config.model_dump()
    write_report(config.out, f"{name}.json", payload)
    print(f"{name}: {verdict or 'done'}")
    return EXIT_OK if verdict in (None, "PASS", "MATCH") else EXIT_NEGATIVE


def _node(s: SystemOfIsometries, token: str) -> tuple[str, Point]:
    component, sep, point = token.partition(":")
    if not sep:
        raise UsageError(f"expected <component>:<point>, got '{token}'")
    c = s.forest.component(component)
    return component, parse_point(point, c.tree, s.field_radicand)


def handle_validate(args, config: RunConfig) -> int:
    s = _load_system(args)
    report = validate_system(s)
    payload = report.to_dict()
    return _finish(args, config, "validate", payload, payload["verdict"])


def handle_gamma(args, config: RunConfig) -> int:
    s = _load_system(args)
    gamma = associated_graph(s)
    write_text(config.out, "gamma.dot", gamma_to_dot(gamma))
    payload = {
        "vertices": list(gamma.vertices),
        "edges": [{"letter": name, "source": u, "target": v} for name, u, v in gamma.edges],
        "betti": gamma.betti,
        "connected": gamma.connected,
        "valence": {v: gamma.valence(v) for v in gamma.vertices},
    }
    return _finish(args, config, "gamma", payload)


def handle_rips(args, config: RunConfig) -> int:
    s = _load_system(args)
    if args.run:
        history = run_induction(s, config.budgets.max_steps, max_components=config.budgets.max_components)
        steps = [step for step in history.steps if step.kind == "rips"]
        payload = history.to_dict()
    else:
        steps = [rips_step(s)]
        payload = steps[0].to_dict()
    if steps:
        write_text(config.out, "rips_output.sys", emit_system(steps[-1].output))
    return _finish(args, config, "rips", payload)


def handle_split(args, config: RunConfig) -> int:
    s = _load_system(args)
    if args.apply:
        step = split_all(s)
        write_text(config.out, "split_output.sys", emit_system(step.output))
        payload = step.to_dict()
    else:
        payload = {"splitting_points": [p.to_dict() for p in find_splitting_points(s)]}
    return _finish(args, config, "split", payload)


def handle_induct(args, config: RunConfig) -> int:
    s = _load_system(args)
    history = run_induction(
        s, config.budgets.max_steps, policy=args.policy, max_components=config.budgets.max_components
    )
    payload = history.to_dict()
    certified = all(c.passed for c in history.certificates())
    payload["certificates_passed"] = certified
    return _finish(args, config, "induct", payload, "PASS" if certified else "FAIL")


def handle_turns(args, config: RunConfig) -> int:
    s = _load_system(args)
    tt = legal_turns(s, associated_graph(s), config.depths.legality_L)
    write_text(config.out, "whitehead.dot", whitehead_to_dot(tt))
    return _finish(args, config, "turns", tt.to_dict())


def handle_whitehead(args, config: RunConfig) -> int:
    s = _load_system(args)
    gamma = associated_graph(s)
    tt = legal_turns(s, gamma, config.depths.legality_L)
    report = whitehead_report(s, tt)
    write_text(config.out, "whitehead.dot", whitehead_to_dot(tt))
    payload = report.to_dict()
    words = regular_words(s, config.depths.language_n, admissible_language(s, config.depths.language_n, config.budgets.max_words))
    payload["carried"] = carried_subgraph(s, words, gamma).to_dict()
    return _finish(args, config, "whitehead", payload, payload["verdict"])


def handle_minimality(args, config: RunConfig) -> int:
    s = _load_system(args)
    report = minimality_diagnostic(s, config.depths.language_n, config.depths.recurrence_R, config.budgets.max_words)
    payload = report.to_dict()
    verdict = "PASS" if report.verdict == "INCONCLUSIVE" else report.verdict
    return _finish(args, config, "minimality", payload, verdict)


def handle_diagonal(args, config: RunConfig) -> int:
    s = _load_system(args)
    component, x = _node(s, args.point)
    leaves = leaf_set_at(s, component, x, config.depths.language_n)
    closed = diagonal_closure(leaves)
    payload = {"input": leaves.to_dict(), "closure": closed.to_dict(), "added": len(closed.pairs) - len(leaves.pairs)}
    return _finish(args, config, "diagonal", payload)


def _default_points(s: SystemOfIsometries) -> list[tuple[str, Point]]:
    nodes = []
    for c in s.forest.components:
        points = set(branch_points(c.region))
        for x in s.alphabet():
            f = s.oriented(x)
            if f.source == c.name:
                points |= set(f.domain.generators)
        nodes.extend((c.name, p) for p in sort_points(points))
    return nodes


def handle_index(args, config: RunConfig) -> int:
    s = _load_system(args)
    rank = args.rank or s.rank_hint
    if rank is None:
        raise UsageError("index needs --rank or a 'rank' line in the document")
    points = [_node(s, token) for token in args.points] if args.points else _default_points(s)
    r = config.depths.radius_r
    report = index_bound_report(s, rank, points, r)
    if args.points:
        orbit, directions = orbit_graphs(s, points[0], r)
        write_text(config.out, "orbit.dot", orbit_to_dot(orbit))
        write_text(config.out, "directions.dot", direction_graph_to_dot(directions))
    payload = report.to_dict()
    return _finish(args, config, "index", payload, "FAIL" if report.bound_violation else "PASS")


def handle_iet(args, config: RunConfig) -> int:
    e = parse_iet(Path(args.document).read_text(encoding="utf-8"))
    if args.field is not None and e.radicand not in (0, args.field):
        raise UsageError(f"--field asks for radicand {args.field} but the lengths use {e.radicand}")
    if args.iet_command == "import":
        write_text(config.out, "system.sys", emit_system(iet_to_system(e)))
        payload = {"iet": e.to_dict(), "irreducible": e.irreducible}
        return _finish(args, config, "iet_import", payload)
    if args.iet_command == "rauzy":
        payload = {"iet": e.to_dict(), "keane": keane_check(e, max(args.k, 1)).to_dict()}
        try:
            steps = rauzy_sequence(e, args.k)
        except KeaneViolation as err:
            payload["steps"] = [step.kind for step in err.steps]
            payload["keane_violation"] = {"position": err.position, "message": str(err)}
            return _finish(args, config, "iet_rauzy", payload, "FAIL")
        payload["steps"] = [step.kind for step in steps]
        payload["lengths"] = [[str(step.output.lengths[label]) for label in step.output.top] for step in steps]
        if steps:
            write_text(config.out, "iet_rauzy_output.sys", emit_iet(steps[-1].output))
        return _finish(args, config, "iet_rauzy", payload, "PASS")
    report = compare_inductions(e, args.k, policy=args.policy)
    return _finish(args, config, "iet_compare", report.to_dict(), report.verdict)
