"""Plain-text network files.

::

    # comment
    NODES
    # id region rail_candidate x y
    1 1 1 0 4.9
    EDGES
    # id tail head length_km rail_candidate [road_capacity]
    1 1 2 9.656064 1 25900.201

Region values are not checked here; :meth:`MobilityGraph.validate` reports
partition problems so that ``validate`` can list them all at once.
"""
from __future__ import annotations

import math
from pathlib import Path

from .errors import ParseError
from .network import EdgeRecord, MobilityGraph, NodeRecord
from .params import ServiceParams


def _flag(tok: str, lineno: int) -> bool:
    if tok not in ("0", "1"):
        raise ParseError(f"flag must be 0 or 1, got {tok!r}", lineno)
    return tok == "1"


def _num(tok: str, lineno: int, kind=float):
    try:
        return kind(tok)
    except ValueError:
        raise ParseError(f"cannot parse {tok!r} as {kind.__name__}", lineno) from None


def parse_network(text: str, params: ServiceParams | None = None) -> MobilityGraph:
    section = None
    nodes: list[NodeRecord] = []
    edges: list[tuple[EdgeRecord, int]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.upper() in ("NODES", "EDGES"):
            section = line.upper()
            continue
        tok = line.split()
        if section == "NODES":
            if len(tok) != 5:
                raise ParseError(f"node line needs 5 fields, got {len(tok)}", lineno)
            nodes.append(NodeRecord(_num(tok[0], lineno, int), _num(tok[1], lineno, int),
                                    _flag(tok[2], lineno), _num(tok[3], lineno),
                                    _num(tok[4], lineno)))
        elif section == "EDGES":
            if len(tok) not in (5, 6):
                raise ParseError(f"edge line needs 5 or 6 fields, got {len(tok)}", lineno)
            cap = _num(tok[5], lineno) if len(tok) == 6 else math.inf
            rec = EdgeRecord(_num(tok[0], lineno, int), _num(tok[1], lineno, int),
                             _num(tok[2], lineno, int), _num(tok[3], lineno),
                             _flag(tok[4], lineno), cap)
            edges.append((rec, lineno))
        else:
            raise ParseError("data before NODES/EDGES header", lineno)

    node_ids = [n.id for n in nodes]
    if len(set(node_ids)) != len(node_ids):
        raise ParseError("duplicate node ids")
    known = set(node_ids)
    seen_edges = set()
    for rec, lineno in edges:
        if rec.id in seen_edges:
            raise ParseError(f"duplicate edge id {rec.id}", lineno)
        seen_edges.add(rec.id)
        for end in (rec.tail, rec.head):
            if end not in known:
                raise ParseError(f"edge {rec.id} references unknown node {end}", lineno)
        if not rec.length > 0:
            raise ParseError(f"edge {rec.id} has non-positive length", lineno)
    return MobilityGraph(nodes, [r for r, _ in edges], params)


def read_network(path, params: ServiceParams | None = None) -> MobilityGraph:
    return parse_network(Path(path).read_text(), params)


def format_network(graph: MobilityGraph) -> str:
    out = ["NODES", "# id region rail_candidate x y"]
    for n in graph.node_records:
        out.append(f"{n.id} {n.region} {int(n.rail_candidate)} {n.x!r} {n.y!r}")
    out += ["EDGES", "# id tail head length_km rail_candidate road_capacity"]
    for e in graph.edge_records:
        cap = "" if math.isinf(e.road_capacity) else f" {e.road_capacity!r}"
        out.append(f"{e.id} {e.tail} {e.head} {e.length!r} {int(e.rail_candidate)}{cap}")
    return "\n".join(out) + "\n"


def write_network(graph: MobilityGraph, path) -> None:
    Path(path).write_text(format_network(graph))
