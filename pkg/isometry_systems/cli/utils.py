import json
import logging
from pathlib import Path

import graphviz

from isometry_systems.core.indices import DirectionGraph, OrbitGraph
from isometry_systems.core.lamination import TrainTrack
from isometry_systems.core.sysiso import GraphGamma

logger = logging.getLogger(__name__)


def _digraph(name: str, nodes: list[tuple[str, str]], edges: list[tuple[str, str, dict]]) -> str:
    """DOT source with numbered node ids and names as labels; an id like ``I:x`` would read as a port."""
    dot = graphviz.Digraph(name)
    ids: dict[str, str] = {}

    def node_id(node: str, label: str | None = None) -> str:
        if node not in ids:
            ids[node] = f"n{len(ids)}"
            dot.node(ids[node], label if label is not None else node)
        return ids[node]

    for node, label in nodes:
        node_id(node, label)
    for u, v, attrs in edges:
        dot.edge(node_id(u), node_id(v), **attrs)
    return dot.source


def gamma_to_dot(gamma: GraphGamma) -> str:
    return _digraph(
        "gamma",
        [(v, v) for v in gamma.vertices],
        [(u, v, {"label": name}) for name, u, v in gamma.edges],
    )


def whitehead_to_dot(tt: TrainTrack) -> str:
    """One node per oriented letter at each vertex; every turn is an edge with its legality."""
    nodes, edges = [], []
    for v in tt.graph.vertices:
        nodes.extend((f"{v}:{x}", str(x)) for x in tt.graph.initial_letters(v))
        for turn in tt.turns_at(v):
            legal = turn in tt.legal
            edges.append(
                (
                    f"{v}:{turn.pair[0]}",
                    f"{v}:{turn.pair[1]}",
                    {"legal": str(legal).lower(), "style": "solid" if legal else "dashed", "dir": "none"},
                )
            )
    return _digraph(f"whitehead_L{tt.depth}", nodes, edges)


def orbit_to_dot(orbit: OrbitGraph) -> str:
    def name(node) -> str:
        return f"{node[0]}:{node[1]}"

    return _digraph(
        "orbit",
        [(name(node), name(node)) for node in orbit.paths],
        [(name(u), name(v), {"label": str(x)}) for u, x, v in orbit.links],
    )


def direction_graph_to_dot(graph: DirectionGraph) -> str:
    def name(item) -> str:
        (component, _), direction = item
        return f"{component}:{direction}"

    return _digraph(
        "directions",
        [(name(item), name(item)) for item in graph.nodes],
        [(name(u), name(v), {"label": str(x)}) for u, x, v in graph.links],
    )


def write_report(out_dir: str, filename: str, payload: dict) -> Path:
    """Writes a JSON report with sorted keys so identical runs give identical bytes."""
    path = Path(out_dir) / filename
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    logger.info(f"Wrote report {path}")
    return path


def write_text(out_dir: str, filename: str, text: str) -> Path:
    path = Path(out_dir) / filename
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    logger.info(f"Wrote {path}")
    return path
