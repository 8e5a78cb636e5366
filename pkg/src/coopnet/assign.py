"""Route preselection, route costs, logit mode split and edge flow assignment.

Two implementations of the assignment rule live here. The scalar functions
(:func:`route_costs`, :func:`assign_flows`) follow the formulas one request at
a time and serve as the reference. :class:`FlowModel` evaluates many rail
layouts at once with sparse incidence matrices; the optimizer runs on it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy import sparse
from scipy.special import expit

from .demand import TravelRequest
from .errors import Unreachable
from .network import ALT, RAIL, MobilityGraph, NetworkState
from .params import ServiceParams

DEFAULT_MU = 0.1


@dataclass(frozen=True)
class RoutePair:
    """Preselected routes of one request.

    ``rail_route`` lists rail edges (boarding and alighting transfers at the
    endpoints are implicit); it is empty when the rail candidate topology does
    not connect the endpoints, in which case the request has no train option.
    """

    rail_route: tuple[int, ...]
    alt_route: tuple[int, ...]
    detour: Mapping[int, tuple[int, ...]]

    @property
    def has_rail(self) -> bool:
        return bool(self.rail_route)


@dataclass
class FlowField:
    rail: dict[int, float]
    alt: dict[int, float]
    unserved: dict[int, float]


def _better(d1, p1, d2, p2) -> bool:
    tol = 1e-9 * (1.0 + abs(d1) + abs(d2))
    if d1 < d2 - tol:
        return True
    if d1 > d2 + tol:
        return False
    return p1 < p2


def shortest_paths_from(graph: MobilityGraph, source: int, layer: str) -> dict[int, tuple[float, tuple[int, ...]]]:
    """Label-setting search from ``source``; ties on length go to the smallest edge-id sequence."""
    adj = graph.adjacency(layer)
    best: dict[int, tuple[float, tuple[int, ...]]] = {source: (0.0, ())}
    done: set[int] = set()
    while True:
        cand = None
        for v, (d, p) in best.items():
            if v in done:
                continue
            if cand is None or _better(d, p, *best[cand]):
                cand = v
        if cand is None:
            return best
        done.add(cand)
        d, p = best[cand]
        for e in adj.get(cand, ()):
            nd, npth = d + e.length, p + (e.id,)
            if e.head in done:
                continue
            if e.head not in best or _better(nd, npth, *best[e.head]):
                best[e.head] = (nd, npth)


class RouteTable:
    """Caches shortest-path trees per source and layer."""

    def __init__(self, graph: MobilityGraph):
        self.graph = graph
        self._trees: dict[tuple[int, str], dict] = {}

    def path(self, o: int, d: int, layer: str) -> tuple[int, ...] | None:
        key = (o, layer)
        if key not in self._trees:
            self._trees[key] = shortest_paths_from(self.graph, o, layer)
        hit = self._trees[key].get(d)
        return None if hit is None else hit[1]

    def pair(self, o: int, d: int) -> RoutePair:
        alt = self.path(o, d, ALT)
        if alt is None:
            raise Unreachable(f"no alternative-layer path from {o} to {d}")
        rail = self.path(o, d, RAIL) or ()
        detour = {}
        for a in rail:
            edge = self.graph.rail_edges[a]
            sub = self.path(edge.tail, edge.head, ALT)
            if sub is None:
                raise Unreachable(f"no alternative-layer detour for rail edge {a}")
            detour[a] = sub
        return RoutePair(tuple(rail), tuple(alt), detour)


def preselect_routes(graph: MobilityGraph, request: TravelRequest,
                     table: RouteTable | None = None) -> RoutePair:
    return (table or RouteTable(graph)).pair(request.origin, request.destination)


def route_costs(pair: RoutePair, state: NetworkState, graph: MobilityGraph,
                params: ServiceParams | None = None) -> tuple[float, float]:
    """Generalized costs (u_R, u_A) in CHF of the train-prioritized and alternative routes."""
    params = params or ServiceParams()
    ac, rc = params.alt_unit_cost, params.rail_unit_cost
    u_a = sum(graph.alt_edges[e].length * ac for e in pair.alt_route)
    if not pair.has_rail:
        return math.inf, u_a
    conn = dict(zip(state.edge_ids, state.connectivity))
    u_r = 0.0
    for a in pair.rail_route:
        if conn[a]:
            u_r += graph.rail_edges[a].length * rc
        else:
            u_r += sum(graph.alt_edges[e].length * ac for e in pair.detour[a])
    return u_r, u_a


def logit_split(u_r: float, u_a: float, mu: float = DEFAULT_MU) -> float:
    """Share of travellers taking the train-prioritized route."""
    if math.isinf(u_r):
        return 0.0
    z = mu * (u_r - u_a)
    if z >= 0:
        w = math.exp(-z)
        return w / (1.0 + w)
    return 1.0 / (1.0 + math.exp(z))


def assign_flows(graph: MobilityGraph, state: NetworkState, requests: Sequence[TravelRequest],
                 mu: float = DEFAULT_MU, params: ServiceParams | None = None,
                 routes: Sequence[RoutePair] | None = None) -> FlowField:
    params = params or ServiceParams()
    if routes is None:
        table = RouteTable(graph)
        routes = [table.pair(r.origin, r.destination) for r in requests]
    rail_dem = dict.fromkeys(graph.rail_ids, 0.0)
    alt = dict.fromkeys(graph.alt_ids, 0.0)
    for req, pair in zip(requests, routes):
        u_r, u_a = route_costs(pair, state, graph, params)
        p = logit_split(u_r, u_a, mu)
        for e in pair.rail_route:
            rail_dem[e] += req.trips * p
        for e in pair.alt_route:
            alt[e] += req.trips * (1.0 - p)
    cap = dict(zip(state.edge_ids, state.capacity(params.kappa)))
    rail, unserved = {}, {}
    for e in graph.rail_ids:
        rail[e] = min(rail_dem[e], cap[e])
        unserved[e] = max(0.0, rail_dem[e] - cap[e])
    detours: dict[int, tuple[int, ...]] = {}
    for pair in routes:
        detours.update(pair.detour)
    for a, path in sorted(detours.items()):
        for e in path:
            alt[e] += unserved[a]
    return FlowField(rail, alt, unserved)


class FlowModel:
    """Batched assignment for a fixed graph, route set and demand.

    Layout batches are column-stacked: ``X`` and ``S`` have shape
    ``(n_rail, K)``; every output carries the same trailing ``K`` axis.
    """

    def __init__(self, graph: MobilityGraph, routes: Sequence[RoutePair],
                 trips: Sequence[float], params: ServiceParams | None = None,
                 mu: float = DEFAULT_MU):
        self.graph = graph
        self.params = params = params or ServiceParams()
        self.mu = mu
        self.trips = np.asarray(trips, dtype=float)
        m, nr, na = len(routes), len(graph.rail_ids), len(graph.alt_ids)
        ri, ai = graph.rail_index, graph.alt_index
        rows, cols = [], []
        arows, acols = [], []
        detour_rows, detour_cols = [], []
        detours: dict[int, tuple[int, ...]] = {}
        for k, pair in enumerate(routes):
            for e in pair.rail_route:
                rows.append(k)
                cols.append(ri[e])
            for e in pair.alt_route:
                arows.append(k)
                acols.append(ai[e])
            detours.update(pair.detour)
        for a, path in detours.items():
            for e in path:
                detour_rows.append(ri[a])
                detour_cols.append(ai[e])
        self.R = sparse.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(m, nr))
        self.RT = self.R.T.tocsr()
        A = sparse.csr_matrix((np.ones(len(arows)), (arows, acols)), shape=(m, na))
        self.DT = sparse.csr_matrix((np.ones(len(detour_rows)), (detour_rows, detour_cols)),
                                    shape=(nr, na)).T.tocsr()
        self.AT = A.T.tocsr()
        self.has_rail = np.array([p.has_rail for p in routes])
        alt_len = graph.alt_lengths()
        rail_len = graph.rail_lengths()
        self.u_alt = A @ (alt_len * params.alt_unit_cost)
        self.rail_term = rail_len * params.rail_unit_cost
        detour_cost = np.zeros(nr)
        for a, path in detours.items():
            detour_cost[ri[a]] = sum(graph.alt_edges[e].length for e in path) * params.alt_unit_cost
        self.detour_cost = detour_cost

    @classmethod
    def for_requests(cls, graph: MobilityGraph, requests: Sequence[TravelRequest],
                     params: ServiceParams | None = None, mu: float = DEFAULT_MU,
                     table: RouteTable | None = None) -> "FlowModel":
        table = table or RouteTable(graph)
        routes = [table.pair(r.origin, r.destination) for r in requests]
        return cls(graph, routes, [r.trips for r in requests], params, mu)

    def with_trips(self, trips: Sequence[float]) -> "FlowModel":
        clone = object.__new__(FlowModel)
        clone.__dict__.update(self.__dict__)
        clone.trips = np.asarray(trips, dtype=float)
        return clone

    def route_costs(self, X: np.ndarray) -> np.ndarray:
        """u_R for every request and layout, shape ``(M, K)``."""
        w = np.where(X, self.rail_term[:, None], self.detour_cost[:, None])
        u = self.R @ w
        u[~self.has_rail] = np.inf
        return u

    def split(self, X: np.ndarray) -> np.ndarray:
        u = self.route_costs(X)
        return expit(-self.mu * (u - self.u_alt[:, None]))

    def evaluate(self, X: np.ndarray, S: np.ndarray):
        """Return ``(p, rail_flow, alt_flow, unserved)`` for a batch of layouts."""
        X = np.asarray(X, dtype=bool)
        if X.ndim == 1:
            X = X[:, None]
            S = np.asarray(S)[:, None]
        p = self.split(X)
        ap = self.trips[:, None] * p
        dem = self.RT @ ap
        cap = self.params.kappa * np.asarray(S, dtype=float)
        rail = np.minimum(dem, cap)
        unserved = dem - rail
        alt = self.AT @ (self.trips[:, None] - ap) + self.DT @ unserved
        return p, rail, alt, unserved

    def flow_field(self, state: NetworkState) -> FlowField:
        _, rail, alt, unserved = self.evaluate(state.connectivity, state.frequency)
        g = self.graph
        return FlowField(dict(zip(g.rail_ids, rail[:, 0].tolist())),
                         dict(zip(g.alt_ids, alt[:, 0].tolist())),
                         dict(zip(g.rail_ids, unserved[:, 0].tolist())))
