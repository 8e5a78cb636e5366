"""Two-region, two-layer mobility graph and the yearly rail layout state.

Node ids are shared by the two layers: every rail station ``n`` sits on top of
the alternative-layer node ``n``. Rail and alternative edges built from the
same network-file record share an id and are told apart by their layer.
Transfer edges are implicit in routing (zero length, zero cost); they are
listed on the graph for completeness with ids ``2n`` (board) and ``2n + 1``
(alight).
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, Mapping

import numpy as np

from .errors import BigMViolation, FrequencyOverflow, RebuildExisting, UnknownEdge
from .params import ServiceParams

RAIL = "rail"
ALT = "alt"
TRANSFER = "transfer"
CROSSING = "crossing"


def region_class(tail_region: int, head_region: int) -> str:
    if tail_region != head_region:
        return CROSSING
    return f"region{tail_region}"


@dataclass(frozen=True)
class EdgeLabel:
    available: bool
    capacity: float
    length: float
    travel_time: float


@dataclass(frozen=True)
class Node:
    id: int
    region: int
    layer: str
    x: float = 0.0
    y: float = 0.0


@dataclass(frozen=True)
class Edge:
    id: int
    tail: int
    head: int
    layer: str
    region_class: str
    label: EdgeLabel

    @property
    def length(self) -> float:
        return self.label.length


@dataclass(frozen=True)
class NodeRecord:
    """One line of the NODES section of a network file."""

    id: int
    region: int
    rail_candidate: bool = True
    x: float = 0.0
    y: float = 0.0


@dataclass(frozen=True)
class EdgeRecord:
    """One line of the EDGES section of a network file."""

    id: int
    tail: int
    head: int
    length: float
    rail_candidate: bool = True
    road_capacity: float = float("inf")


class MobilityGraph:
    """Immutable multimodal graph. Build it with :meth:`from_records`."""

    def __init__(self, node_records: Iterable[NodeRecord], edge_records: Iterable[EdgeRecord],
                 params: ServiceParams | None = None):
        self.params = params or ServiceParams()
        self.node_records: tuple[NodeRecord, ...] = tuple(sorted(node_records, key=lambda n: n.id))
        self.edge_records: tuple[EdgeRecord, ...] = tuple(sorted(edge_records, key=lambda e: e.id))
        self.region: dict[int, int] = {n.id: n.region for n in self.node_records}
        stations = {n.id for n in self.node_records if n.rail_candidate}

        nodes = []
        for n in self.node_records:
            nodes.append(Node(n.id, n.region, ALT, n.x, n.y))
            if n.rail_candidate:
                nodes.append(Node(n.id, n.region, RAIL, n.x, n.y))
        self.nodes: tuple[Node, ...] = tuple(nodes)

        alt, rail = {}, {}
        for rec in self.edge_records:
            cls = region_class(self.region.get(rec.tail, 0), self.region.get(rec.head, 0))
            alt[rec.id] = Edge(rec.id, rec.tail, rec.head, ALT, cls,
                               EdgeLabel(True, rec.road_capacity, rec.length,
                                         rec.length / self.params.alt_speed))
            if rec.rail_candidate and rec.tail in stations and rec.head in stations:
                rail[rec.id] = Edge(rec.id, rec.tail, rec.head, RAIL, cls,
                                    EdgeLabel(False, 0, rec.length,
                                              rec.length / self.params.rail_speed))
        self.alt_edges: dict[int, Edge] = alt
        self.rail_edges: dict[int, Edge] = rail
        transfer = []
        for n in sorted(stations):
            cls = f"region{self.region[n]}"
            lab = EdgeLabel(True, float("inf"), 0.0, 0.0)
            transfer.append(Edge(2 * n, n, n, TRANSFER, cls, lab))
            transfer.append(Edge(2 * n + 1, n, n, TRANSFER, cls, lab))
        self.transfer_edges: tuple[Edge, ...] = tuple(transfer)

        self.alt_ids: tuple[int, ...] = tuple(sorted(alt))
        self.rail_ids: tuple[int, ...] = tuple(sorted(rail))
        self.alt_index = {e: k for k, e in enumerate(self.alt_ids)}
        self.rail_index = {e: k for k, e in enumerate(self.rail_ids)}
        self.node_ids: tuple[int, ...] = tuple(n.id for n in self.node_records)

    @classmethod
    def from_records(cls, nodes, edges, params=None) -> "MobilityGraph":
        return cls(nodes, edges, params)

    def __eq__(self, other):
        if not isinstance(other, MobilityGraph):
            return NotImplemented
        return (self.node_records == other.node_records
                and self.edge_records == other.edge_records)

    def __repr__(self):
        return (f"MobilityGraph(nodes={len(self.node_records)}, alt_edges={len(self.alt_edges)}, "
                f"rail_edges={len(self.rail_edges)})")

    @property
    def regions(self) -> tuple[int, ...]:
        return tuple(sorted(set(self.region.values())))

    def region_nodes(self, i: int) -> tuple[int, ...]:
        return tuple(n for n in self.node_ids if self.region[n] == i)

    def region_rail_ids(self, i: int) -> tuple[int, ...]:
        """Rail edges lying entirely inside region ``i``."""
        cls = f"region{i}"
        return tuple(e for e in self.rail_ids if self.rail_edges[e].region_class == cls)

    def crossing_rail_ids(self) -> tuple[int, ...]:
        return tuple(e for e in self.rail_ids if self.rail_edges[e].region_class == CROSSING)

    def rail_lengths(self) -> np.ndarray:
        return np.array([self.rail_edges[e].length for e in self.rail_ids])

    def alt_lengths(self) -> np.ndarray:
        return np.array([self.alt_edges[e].length for e in self.alt_ids])

    def region_share(self, layer: str, i: int) -> np.ndarray:
        """Attribution of each edge of ``layer`` to region ``i`` (1, 0.5 for crossing, or 0)."""
        edges, ids = (self.rail_edges, self.rail_ids) if layer == RAIL else (self.alt_edges, self.alt_ids)
        own = f"region{i}"
        out = np.zeros(len(ids))
        for k, e in enumerate(ids):
            cls = edges[e].region_class
            out[k] = 1.0 if cls == own else 0.5 if cls == CROSSING else 0.0
        return out

    def adjacency(self, layer: str) -> dict[int, list[Edge]]:
        edges = self.rail_edges if layer == RAIL else self.alt_edges
        adj: dict[int, list[Edge]] = {n: [] for n in self.node_ids}
        for e in sorted(edges):
            adj.setdefault(edges[e].tail, []).append(edges[e])
        return adj

    def validate(self) -> list[str]:
        """Return a description of every violated graph invariant (empty when valid)."""
        problems = []
        if not self.node_records:
            problems.append("network has no nodes")
        seen = set()
        for n in self.node_records:
            if n.id in seen:
                problems.append(f"duplicate node id {n.id}")
            seen.add(n.id)
            if n.region not in (1, 2):
                problems.append(f"node {n.id}: region {n.region} is outside the partition {{1, 2}}")
        for e in self.edge_records:
            if e.tail not in self.region or e.head not in self.region:
                problems.append(f"edge {e.id}: endpoint does not exist")
            if not e.length > 0:
                problems.append(f"edge {e.id}: length must be positive")
            if e.tail == e.head:
                problems.append(f"edge {e.id}: self loop")
        if len({e.id for e in self.edge_records}) != len(self.edge_records):
            problems.append("duplicate edge ids")
        for e in list(self.alt_edges.values()) + list(self.rail_edges.values()):
            tr, hr = self.region.get(e.tail), self.region.get(e.head)
            if tr is not None and hr is not None and e.region_class != region_class(tr, hr):
                problems.append(f"edge {e.id}: region class {e.region_class} disagrees with endpoints")
        stations = [n for n in self.nodes if n.layer == RAIL]
        xfer = {(e.id // 2, e.id % 2) for e in self.transfer_edges}
        for n in stations:
            if (n.id, 0) not in xfer or (n.id, 1) not in xfer:
                problems.append(f"rail node {n.id}: missing transfer edge pair")
        if self.node_ids and not _strongly_connected(self.node_ids, self.adjacency(ALT)):
            problems.append("alternative layer is not strongly connected")
        return problems


def _strongly_connected(nodes, adj) -> bool:
    def reach(start, succ):
        seen = {start}
        queue = deque([start])
        while queue:
            u = queue.popleft()
            for v in succ.get(u, ()):
                if v not in seen:
                    seen.add(v)
                    queue.append(v)
        return seen

    fwd = {u: [e.head for e in es] for u, es in adj.items()}
    bwd: dict[int, list[int]] = {}
    for u, vs in fwd.items():
        for v in vs:
            bwd.setdefault(v, []).append(u)
    start = nodes[0]
    return len(reach(start, fwd)) == len(nodes) and len(reach(start, bwd)) == len(nodes)


@dataclass(frozen=True)
class DesignAction:
    """One year's construction (``builds``) and frequency upgrades for rail edges."""

    builds: frozenset = frozenset()
    upgrades: Mapping[int, int] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "builds", frozenset(int(e) for e in self.builds))
        ups = {int(e): int(s) for e, s in sorted(self.upgrades.items()) if int(s) != 0}
        if any(s < 0 for s in ups.values()):
            raise ValueError("frequency upgrades must be non-negative")
        object.__setattr__(self, "upgrades", ups)

    def __add__(self, other: "DesignAction") -> "DesignAction":
        ups = dict(self.upgrades)
        for e, s in other.upgrades.items():
            ups[e] = ups.get(e, 0) + s
        return DesignAction(self.builds | other.builds, ups)

    def __hash__(self):
        return hash((self.builds, tuple(self.upgrades.items())))

    @property
    def is_empty(self) -> bool:
        return not self.builds and not self.upgrades

    def edges(self) -> tuple[int, ...]:
        return tuple(sorted(set(self.builds) | set(self.upgrades)))

    def key(self, edge_ids: Iterable[int]) -> tuple[int, ...]:
        """Lexicographic tie-break key over the given sorted edge ids."""
        out = []
        for e in edge_ids:
            out.extend((int(e in self.builds), self.upgrades.get(e, 0)))
        return tuple(out)

    @classmethod
    def from_arrays(cls, edge_ids, x, s) -> "DesignAction":
        return cls(frozenset(e for e, b in zip(edge_ids, x) if b),
                   {e: int(v) for e, v in zip(edge_ids, s) if v})


@dataclass(frozen=True, eq=False)
class NetworkState:
    """Rail layout in a given year: connectivity ``X`` and cumulative frequency ``S``.

    Arrays are aligned with ``edge_ids`` (the graph's sorted rail ids).
    """

    year: int
    edge_ids: tuple[int, ...]
    connectivity: np.ndarray
    frequency: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.connectivity, dtype=bool).copy()
        s = np.asarray(self.frequency, dtype=np.int64).copy()
        x.flags.writeable = False
        s.flags.writeable = False
        object.__setattr__(self, "connectivity", x)
        object.__setattr__(self, "frequency", s)
        if np.any((s > 0) & ~x):
            bad = [self.edge_ids[k] for k in np.flatnonzero((s > 0) & ~x)]
            raise BigMViolation(f"frequency on unconnected rail edges {bad}")

    @classmethod
    def empty(cls, graph: MobilityGraph, year: int = 0) -> "NetworkState":
        n = len(graph.rail_ids)
        return cls(year, graph.rail_ids, np.zeros(n, bool), np.zeros(n, np.int64))

    def __eq__(self, other):
        if not isinstance(other, NetworkState):
            return NotImplemented
        return (self.year == other.year and self.edge_ids == other.edge_ids
                and np.array_equal(self.connectivity, other.connectivity)
                and np.array_equal(self.frequency, other.frequency))

    def same_layout(self, other: "NetworkState") -> bool:
        return (np.array_equal(self.connectivity, other.connectivity)
                and np.array_equal(self.frequency, other.frequency))

    def capacity(self, kappa: float) -> np.ndarray:
        return kappa * self.frequency

    def contains(self, other: "NetworkState") -> bool:
        """True when this layout includes every connection and frequency of ``other``."""
        return bool(np.all(self.connectivity >= other.connectivity)
                    and np.all(self.frequency >= other.frequency))

    def as_dict(self) -> dict[int, tuple[bool, int]]:
        return {e: (bool(x), int(s)) for e, x, s in
                zip(self.edge_ids, self.connectivity, self.frequency)}


def apply_action(state: NetworkState, action: DesignAction, s_max: int = 15,
                 advance_year: bool = True) -> NetworkState:
    """Add a year's builds and frequency upgrades to the layout."""
    index = {e: k for k, e in enumerate(state.edge_ids)}
    x = state.connectivity.copy()
    s = state.frequency.copy()
    for e in action.edges():
        if e not in index:
            raise UnknownEdge(e)
    for e in sorted(action.builds):
        k = index[e]
        if x[k]:
            raise RebuildExisting(f"rail edge {e} is already connected")
        x[k] = True
    for e, up in action.upgrades.items():
        k = index[e]
        if not x[k]:
            raise BigMViolation(f"rail edge {e} has no connection; frequency cannot be assigned")
        if s[k] + up > s_max:
            raise FrequencyOverflow(f"rail edge {e}: frequency {s[k] + up} exceeds {s_max}")
        s[k] += up
    return NetworkState(state.year + (1 if advance_year else 0), state.edge_ids, x, s)


def build_sioux_falls(params: ServiceParams | None = None) -> MobilityGraph:
    """The bundled Sioux Falls network split into nodes 1-11 and 12-24."""
    from .netfile import parse_network

    text = resources.files("coopnet.data").joinpath("sioux_falls.net").read_text()
    return parse_network(text, params=params)
