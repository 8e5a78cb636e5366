"""Small instances for oracle checks: user-equilibrium toys and random two-region games."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .assign import FlowModel
from .demand import TravelRequest, classify
from .game import GameContext
from .metrics import ObjectiveModel
from .network import DesignAction, EdgeRecord, MobilityGraph, NetworkState, NodeRecord, apply_action
from .params import BETA_GRID, ServiceParams, Weights

INF = math.inf


@dataclass
class UEToy:
    name: str
    graph: MobilityGraph
    state: NetworkState
    requests: list[TravelRequest]
    params: ServiceParams
    hop_bound: int = 8


def _req(graph, o, d, trips):
    return TravelRequest(o, d, trips, classify(o, d, graph))


def _built(graph: MobilityGraph, freq: dict[int, int], params: ServiceParams) -> NetworkState:
    action = DesignAction(frozenset(freq), dict(freq))
    return apply_action(NetworkState.empty(graph), action, params.s_max, advance_year=False)


def parallel_toy() -> UEToy:
    """Two identical capacitated roads between one OD pair."""
    p = ServiceParams()
    nodes = [NodeRecord(1, 1, False), NodeRecord(2, 2, False)]
    edges = [EdgeRecord(1, 1, 2, 10.0, False, 50.0), EdgeRecord(2, 1, 2, 10.0, False, 50.0),
             EdgeRecord(3, 2, 1, 10.0, False, 50.0)]
    g = MobilityGraph(nodes, edges, p)
    return UEToy("parallel", g, NetworkState.empty(g), [_req(g, 1, 2, 100)], p)


PIGOU_CONSTANT_LENGTH = 12.0
PIGOU_BPR_LENGTH = 10.0
PIGOU_CAPACITY = 40.0
PIGOU_DEMAND = 100


def pigou_toy() -> UEToy:
    """An uncongestible road next to a short congestible one."""
    p = ServiceParams()
    nodes = [NodeRecord(1, 1, False), NodeRecord(2, 2, False)]
    edges = [EdgeRecord(1, 1, 2, PIGOU_CONSTANT_LENGTH, False, INF),
             EdgeRecord(2, 1, 2, PIGOU_BPR_LENGTH, False, PIGOU_CAPACITY),
             EdgeRecord(3, 2, 1, PIGOU_BPR_LENGTH, False, INF)]
    g = MobilityGraph(nodes, edges, p)
    return UEToy("pigou", g, NetworkState.empty(g), [_req(g, 1, 2, PIGOU_DEMAND)], p)


def pigou_closed_form(params: ServiceParams | None = None) -> float:
    """Flow on the congestible link where both links cost the same."""
    p = params or ServiceParams()
    const = PIGOU_CONSTANT_LENGTH * p.alt_unit_cost
    free = PIGOU_BPR_LENGTH * p.alt_unit_cost
    slope = p.vot * PIGOU_BPR_LENGTH / p.alt_speed * p.bpr_alpha
    if const <= free:
        return 0.0
    y = PIGOU_CAPACITY * ((const - free) / slope) ** (1.0 / p.bpr_beta)
    return min(y, float(PIGOU_DEMAND))


def capacitated_rail_toy() -> UEToy:
    """Cheap rail capped at 50 seats next to a road, 100 travellers."""
    p = ServiceParams(kappa=50)
    nodes = [NodeRecord(1, 1, True), NodeRecord(2, 2, True)]
    edges = [EdgeRecord(1, 1, 2, 10.0, True, 40.0), EdgeRecord(2, 2, 1, 10.0, True, 40.0)]
    g = MobilityGraph(nodes, edges, p)
    return UEToy("capacitated-rail", g, _built(g, {1: 1}, p), [_req(g, 1, 2, 100)], p)


def line_toy() -> UEToy:
    """Four stations on a line with partial rail service and three requests."""
    p = ServiceParams(kappa=60)
    nodes = [NodeRecord(1, 1, True), NodeRecord(2, 1, True), NodeRecord(3, 2, True), NodeRecord(4, 2, True)]
    edges = [EdgeRecord(1, 1, 2, 8.0, True, 60.0), EdgeRecord(2, 2, 1, 8.0, True, 60.0),
             EdgeRecord(3, 2, 3, 12.0, True, 80.0), EdgeRecord(4, 3, 2, 12.0, True, 80.0),
             EdgeRecord(5, 3, 4, 6.0, True, 50.0), EdgeRecord(6, 4, 3, 6.0, True, 50.0)]
    g = MobilityGraph(nodes, edges, p)
    reqs = [_req(g, 1, 3, 120), _req(g, 1, 4, 60), _req(g, 2, 4, 90)]
    return UEToy("line", g, _built(g, {1: 1, 3: 2}, p), reqs, p, hop_bound=7)


def ue_toys() -> list[UEToy]:
    return [parallel_toy(), pigou_toy(), capacitated_rail_toy(), line_toy()]


@dataclass
class GameToy:
    """A four-node, two-region instance with six rail candidates and s_max = 2."""

    graph: MobilityGraph
    requests: list[TravelRequest]
    params: ServiceParams
    budgets: dict[int, float]
    betas: dict[int, float]
    weights: Weights = field(default_factory=Weights)

    def context(self, mu: float = 0.1, seed: int = 0, method: str = "auto") -> GameContext:
        flow = FlowModel.for_requests(self.graph, self.requests, self.params, mu)
        return GameContext(self.graph, flow, ObjectiveModel(self.graph, self.params, self.weights),
                           self.params, seed=seed, method=method)


def toy_graph(lengths, params: ServiceParams | None = None, inter_links: bool = True) -> MobilityGraph:
    """Line 1-2-3-4, nodes 1-2 in region 1 and 3-4 in region 2.

    ``lengths`` gives the three link lengths; each link carries both directions.
    Without ``inter_links`` the 2-3 link has no rail candidate.
    """
    nodes = [NodeRecord(1, 1, True, 0, 0), NodeRecord(2, 1, True, 1, 0),
             NodeRecord(3, 2, True, 2, 0), NodeRecord(4, 2, True, 3, 0)]
    pairs = [(1, 2), (2, 3), (3, 4)]
    edges = []
    for k, ((a, b), l) in enumerate(zip(pairs, lengths)):
        rail = inter_links or (a, b) != (2, 3)
        edges.append(EdgeRecord(2 * k + 1, a, b, float(l), rail))
        edges.append(EdgeRecord(2 * k + 2, b, a, float(l), rail))
    return MobilityGraph(nodes, edges, params)


def random_game_toy(seed: int) -> GameToy:
    rng = np.random.default_rng(seed)
    params = ServiceParams(kappa=int(rng.integers(60, 301)), s_max=2)
    lengths = rng.uniform(5.0, 30.0, size=3).round(3)
    g = toy_graph(lengths, params)
    reqs = []
    for o in g.node_ids:
        for d in g.node_ids:
            if o != d:
                reqs.append(_req(g, o, d, int(rng.integers(20, 201))))
    full = sum(params.base_cost * g.rail_edges[e].length + 2 * params.capacity_cost * g.rail_edges[e].length
               for e in g.rail_ids)
    budgets = {i: float(rng.uniform(0.05, 0.6) * full) for i in (1, 2)}
    betas = {i: float(rng.choice(BETA_GRID)) for i in (1, 2)}
    return GameToy(g, reqs, params, budgets, betas)


def uniform_game_toy(lengths, kappa: int, inter: int, intra: int, budget: float,
                     betas=(0.0, 0.0), inter_links: bool = True) -> GameToy:
    """Every inter-regional pair carries ``inter`` trips, every intra-regional pair ``intra``."""
    params = ServiceParams(kappa=kappa, s_max=2)
    g = toy_graph(lengths, params, inter_links)
    reqs = []
    for o in g.node_ids:
        for d in g.node_ids:
            trips = inter if g.region[o] != g.region[d] else intra
            if o != d and trips > 0:
                reqs.append(_req(g, o, d, trips))
    return GameToy(g, reqs, params, {1: budget, 2: budget}, {1: betas[0], 2: betas[1]})


def interdependence_toy() -> GameToy:
    """Region 1 builds only when region 2's rail shortens the inter-regional trips."""
    return uniform_game_toy((3.0, 4.4, 11.8), kappa=297, inter=234, intra=32, budget=7668.0)
