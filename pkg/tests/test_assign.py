import math
from decimal import Decimal, getcontext

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from coopnet.assign import (FlowModel, RoutePair, RouteTable, assign_flows, logit_split,
                            preselect_routes, route_costs)
from coopnet.demand import TravelRequest, generate
from coopnet.errors import Unreachable
from coopnet.network import (ALT, DesignAction, EdgeRecord, MobilityGraph, NetworkState,
                             NodeRecord, apply_action)
from coopnet.params import ServiceParams


def _graph(edges, regions=None, params=None):
    ids = sorted({n for _, a, b, *_ in edges for n in (a, b)})
    regions = regions or {}
    nodes = [NodeRecord(n, regions.get(n, 1)) for n in ids]
    return MobilityGraph(nodes, [EdgeRecord(*e) for e in edges], params)


def _state(graph, freq):
    return apply_action(NetworkState.empty(graph), DesignAction(frozenset(freq), dict(freq)),
                        advance_year=False)


def test_one_hop_route():
    g = _graph([(1, 1, 2, 3.0), (2, 2, 1, 3.0), (3, 1, 3, 1.0), (4, 3, 2, 1.0), (5, 2, 3, 9.0),
                (6, 3, 1, 9.0)])
    pair = RouteTable(g).pair(1, 2)
    assert pair.alt_route == (3, 4)
    pair = RouteTable(g).pair(2, 1)
    assert pair.alt_route == (2,)


def test_diamond_tie_break_is_lexicographic():
    # 1 -> 2 -> 4 uses edges (1, 3); 1 -> 3 -> 4 uses (2, 4); equal lengths
    g = _graph([(4, 3, 4, 1.0), (1, 1, 2, 1.0), (2, 1, 3, 1.0), (3, 2, 4, 1.0),
                (5, 4, 1, 5.0)])
    for _ in range(3):
        assert RouteTable(g).pair(1, 4).alt_route == (1, 3)


def test_unreachable():
    g = _graph([(1, 1, 2, 1.0)])
    with pytest.raises(Unreachable):
        RouteTable(g).pair(2, 1)


def _all_shortest(graph, o, d):
    """Floyd-Warshall distances, then every simple path attaining them."""
    nodes = list(graph.node_ids)
    idx = {n: k for k, n in enumerate(nodes)}
    dist = np.full((len(nodes), len(nodes)), np.inf)
    np.fill_diagonal(dist, 0.0)
    for e in graph.alt_edges.values():
        dist[idx[e.tail], idx[e.head]] = min(dist[idx[e.tail], idx[e.head]], e.length)
    for k in range(len(nodes)):
        dist = np.minimum(dist, dist[:, [k]] + dist[[k], :])
    best = dist[idx[o], idx[d]]
    out = []

    def dfs(u, used, path, length):
        if length > best + 1e-9:
            return
        if u == d:
            out.append(tuple(path))
            return
        for e in graph.alt_edges.values():
            if e.tail == u and e.head not in used:
                if length + e.length + dist[idx[e.head], idx[d]] > best + 1e-9:
                    continue
                dfs(e.head, used | {e.head}, path + [e.id], length + e.length)

    dfs(o, {o}, [], 0.0)
    return best, sorted(out)


def test_sioux_routes_match_brute_force(sioux):
    best, paths = _all_shortest(sioux, 1, 24)
    pair = RouteTable(sioux).pair(1, 24)
    assert pair.alt_route == paths[0]
    assert sum(sioux.alt_edges[e].length for e in pair.alt_route) == pytest.approx(best)
    # the rail candidate layer mirrors the roads, so the rail route follows the same edges
    assert pair.rail_route == paths[0]
    for a, sub in pair.detour.items():
        e = sioux.rail_edges[a]
        assert _all_shortest(sioux, e.tail, e.head)[1][0] == sub


def test_route_cost_examples():
    g = _graph([(1, 1, 2, 10.0), (2, 2, 1, 10.0)])
    pair = RouteTable(g).pair(1, 2)
    u_r, u_a = route_costs(pair, _state(g, {1: 1}), g)
    assert u_r == pytest.approx(4.5)
    assert u_a == pytest.approx(19.5)
    u_r, _ = route_costs(pair, NetworkState.empty(g), g)
    assert u_r == pytest.approx(19.5)


def test_logit_examples():
    assert logit_split(7.0, 7.0, 0.3) == 0.5
    getcontext().prec = 40
    exact = 1 / (1 + (Decimal(-1)).exp())
    assert logit_split(1.0, 2.0, 1.0) == pytest.approx(float(exact), rel=1e-15)
    p = logit_split(2.0 + 1e6, 2.0, 1.0)
    assert p == 0.0 or (0 <= p < 1e-300)
    assert not math.isnan(p)
    assert logit_split(math.inf, 3.0) == 0.0


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 500), st.floats(0, 500), st.floats(0.01, 2))
def test_logit_range_and_monotone(u_r, u_a, mu):
    p = logit_split(u_r, u_a, mu)
    assert 0.0 <= p <= 1.0
    if abs(mu * (u_r - u_a)) < 30:
        assert 0.0 < p < 1.0
    assert logit_split(u_r + 1.0, u_a, mu) <= p


def test_spillover_example():
    # one request alpha=100, rail share 0.6, rail edge capacity 50
    g = _graph([(1, 1, 2, 10.0), (2, 2, 1, 10.0)], params=ServiceParams(kappa=50))
    pair = RouteTable(g).pair(1, 2)
    state = _state(g, {1: 1})
    u_r, u_a = route_costs(pair, state, g, g.params)
    mu = math.log(1.5) / (u_a - u_r)  # gives p = 0.6
    req = TravelRequest(1, 2, 100, "intra1")
    flows = assign_flows(g, state, [req], mu, g.params)
    assert flows.rail[1] == pytest.approx(50)
    assert flows.unserved[1] == pytest.approx(10)
    assert flows.alt[1] == pytest.approx(40 + 10)


def test_zero_demand_and_uncapacitated(sioux):
    reqs = [r for r in generate(sioux, seed=2).requests]
    state = _state(sioux, {e: 15 for e in sioux.rail_ids})
    zero = [TravelRequest(r.origin, r.destination, 0, r.trip_type) for r in reqs]
    f = assign_flows(sioux, state, zero)
    assert all(v == 0 for v in f.rail.values()) and all(v == 0 for v in f.alt.values())
    big = ServiceParams(kappa=10**9)
    f = assign_flows(sioux, state, reqs, params=big)
    assert all(v == 0 for v in f.unserved.values())
    table = RouteTable(sioux)
    expect = dict.fromkeys(sioux.rail_ids, 0.0)
    for r in reqs:
        pair = table.pair(r.origin, r.destination)
        p = logit_split(*route_costs(pair, state, sioux, big))
        for e in pair.rail_route:
            expect[e] += r.trips * p
    for e in sioux.rail_ids:
        assert f.rail[e] == pytest.approx(expect[e], rel=1e-12, abs=1e-9)


def test_person_conservation_on_disjoint_routes():
    # rail and road between 1 and 2 use separate edges, detour of the rail edge is the road
    g = _graph([(1, 1, 2, 10.0), (2, 2, 1, 10.0)], params=ServiceParams(kappa=30))
    state = _state(g, {1: 1})
    req = TravelRequest(1, 2, 120, "intra1")
    f = assign_flows(g, state, [req], 0.2, g.params)
    assert f.rail[1] + f.alt[1] == pytest.approx(120)


def test_rail_connection_never_raises_cost(sioux):
    table = RouteTable(sioux)
    pairs = [table.pair(o, d) for o, d in [(1, 24), (3, 20), (13, 2), (10, 11)]]
    s0 = NetworkState.empty(sioux)
    for e in (1, 5, 30, 60):
        s1 = _state(sioux, {e: 1})
        for pair in pairs:
            assert route_costs(pair, s1, sioux)[0] <= route_costs(pair, s0, sioux)[0] + 1e-12


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.01, 1.0))
def test_batched_model_matches_scalar(sioux, seed, mu):
    rng = np.random.default_rng(seed)
    reqs = list(generate(sioux, seed=seed).requests)[:: int(rng.integers(5, 40))]
    x = rng.random(76) < 0.4
    s = np.where(x, rng.integers(0, 4, 76), 0)
    state = NetworkState(0, sioux.rail_ids, x, s)
    scalar = assign_flows(sioux, state, reqs, mu)
    fm = FlowModel.for_requests(sioux, reqs, mu=mu)
    batched = fm.flow_field(state)
    for e in sioux.rail_ids:
        assert batched.rail[e] == pytest.approx(scalar.rail[e], rel=1e-10, abs=1e-9)
        assert batched.unserved[e] == pytest.approx(scalar.unserved[e], rel=1e-10, abs=1e-9)
    for e in sioux.alt_ids:
        assert batched.alt[e] == pytest.approx(scalar.alt[e], rel=1e-10, abs=1e-9)


def test_preselect_routes_helper(sioux):
    r = TravelRequest(1, 24, 10, "inter1")
    assert preselect_routes(sioux, r) == RouteTable(sioux).pair(1, 24)
    assert isinstance(preselect_routes(sioux, r), RoutePair)
