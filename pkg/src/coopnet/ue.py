"""Desk-scale user-equilibrium assignment with BPR road costs and rail capacities.

Used only as a comparison oracle for the logit assignment in :mod:`assign`.
Path flows are found by projected gradient descent on the Beckmann objective;
the projection onto the demand simplices intersected with rail capacity
half-spaces is computed with Dykstra's algorithm. The reported equilibrium gap
uses path costs augmented by capacity multipliers obtained from a small LP.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import linprog

from .demand import TravelRequest
from .errors import Infeasible, TooLarge, ZeroRoadCapacity
from .network import ALT, RAIL, TRANSFER, Edge, MobilityGraph, NetworkState
from .params import ServiceParams

MAX_NODES = 10
MAX_PATHS = 6


def edge_cost(y: float, edge: Edge, state: NetworkState | None = None,
              params: ServiceParams | None = None) -> float:
    """Generalized cost (CHF per traveller) of ``edge`` carrying flow ``y``."""
    params = params or ServiceParams()
    if edge.layer == ALT:
        cap = edge.label.capacity
        if cap <= 0:
            raise ZeroRoadCapacity(f"alternative edge {edge.id} has zero capacity")
        t0 = edge.length / params.alt_speed
        ratio = 0.0 if math.isinf(cap) else y / cap
        return params.vot * t0 * (1 + params.bpr_alpha * ratio ** params.bpr_beta) + edge.length * params.alt_fare
    if edge.layer == RAIL:
        x = 1.0
        if state is not None:
            x = float(state.connectivity[state.edge_ids.index(edge.id)])
        return x * edge.length * params.rail_unit_cost
    return 0.0


@dataclass
class _Link:
    key: tuple[str, int]
    edge: Edge
    capacity: float  # rail capacity or road capacity (BPR)


@dataclass
class PathSet:
    paths: list[list[tuple[tuple[str, int], ...]]]  # per request, each path a tuple of link keys


@dataclass
class UEResult:
    path_flows: list[np.ndarray]
    edge_flows: dict[tuple[str, int], float]
    gap: float
    objective_history: list[float]
    paths: PathSet
    multipliers: dict[tuple[str, int], float]


def _links(graph: MobilityGraph, state: NetworkState, params: ServiceParams) -> list[_Link]:
    links = [_Link((ALT, e), graph.alt_edges[e], graph.alt_edges[e].label.capacity)
             for e in graph.alt_ids]
    caps = dict(zip(state.edge_ids, state.capacity(params.kappa)))
    conn = dict(zip(state.edge_ids, state.connectivity))
    for e in graph.rail_ids:
        if conn[e]:
            links.append(_Link((RAIL, e), graph.rail_edges[e], float(caps[e])))
    for t in graph.transfer_edges:
        links.append(_Link((TRANSFER, t.id), t, math.inf))
    return links


def _endpoints(link: _Link) -> tuple[tuple[str, int], tuple[str, int]]:
    e = link.edge
    if e.layer == TRANSFER:
        n = e.id // 2
        return ((ALT, n), (RAIL, n)) if e.id % 2 == 0 else ((RAIL, n), (ALT, n))
    return (e.layer, e.tail), (e.layer, e.head)


def enumerate_paths(graph: MobilityGraph, state: NetworkState, requests: Sequence[TravelRequest],
                    hop_bound: int = 8, params: ServiceParams | None = None,
                    max_paths: int = MAX_PATHS) -> tuple[PathSet, list[_Link]]:
    params = params or ServiceParams()
    links = _links(graph, state, params)
    out: dict[tuple[str, int], list[_Link]] = {}
    for link in links:
        out.setdefault(_endpoints(link)[0], []).append(link)
    all_paths = []
    for req in requests:
        found = []
        target = (ALT, req.destination)

        def dfs(node, visited, path):
            if node == target:
                found.append(tuple(path))
                return
            if len(path) >= hop_bound:
                return
            for link in out.get(node, ()):
                nxt = _endpoints(link)[1]
                if nxt in visited:
                    continue
                visited.add(nxt)
                path.append(link.key)
                dfs(nxt, visited, path)
                path.pop()
                visited.discard(nxt)

        start = (ALT, req.origin)
        dfs(start, {start}, [])
        if not found:
            raise Infeasible(f"no path from {req.origin} to {req.destination} within {hop_bound} hops")
        if len(found) > max_paths:
            raise TooLarge(f"request {req.origin}->{req.destination} has {len(found)} paths "
                           f"(limit {max_paths})")
        all_paths.append(sorted(found))
    return PathSet(all_paths), links


class _Problem:
    def __init__(self, links: list[_Link], paths: PathSet, demand: np.ndarray,
                 params: ServiceParams):
        self.params = params
        self.links = links
        self.index = {l.key: k for k, l in enumerate(links)}
        self.demand = demand
        cols = [(m, p) for m, ps in enumerate(paths.paths) for p in ps]
        self.owner = np.array([m for m, _ in cols])
        self.delta = np.zeros((len(links), len(cols)))
        for k, (_, p) in enumerate(cols):
            for key in p:
                self.delta[self.index[key], k] = 1.0
        p = params
        self.length = np.array([l.edge.length for l in links])
        self.is_alt = np.array([l.edge.layer == ALT for l in links])
        self.cap = np.array([l.capacity for l in links])
        self.t0 = np.where(self.is_alt, self.length / p.alt_speed, 0.0)
        self.const = np.where(self.is_alt, self.length * p.alt_fare,
                              np.where([l.edge.layer == RAIL for l in links],
                                       self.length * p.rail_unit_cost, 0.0))
        if np.any(self.is_alt & (self.cap <= 0)):
            raise ZeroRoadCapacity("alternative edge with zero capacity")
        self.inv_cap = np.where(self.is_alt & np.isfinite(self.cap), 1.0 / np.where(self.cap > 0, self.cap, 1), 0.0)
        rail_rows = [k for k, l in enumerate(links)
                     if l.edge.layer == RAIL and self.delta[k].any()]
        self.cap_rows = rail_rows

    def link_cost(self, y):
        p = self.params
        return self.const + p.vot * self.t0 * (1 + p.bpr_alpha * (y * self.inv_cap) ** p.bpr_beta)

    def beckmann(self, f) -> float:
        p = self.params
        y = self.delta @ f
        b = p.bpr_beta
        integ = self.const * y + p.vot * self.t0 * (y + p.bpr_alpha * y * (y * self.inv_cap) ** b / (b + 1))
        return float(integ.sum())

    def path_cost(self, f):
        return self.delta.T @ self.link_cost(self.delta @ f)

    def project(self, z, tol=1e-13, max_iter=20000):
        """Euclidean projection onto {simplices} ∩ {capacity half-spaces} (Dykstra)."""
        sets = [None] + self.cap_rows
        incr = [np.zeros_like(z) for _ in sets]
        x = z.copy()
        for _ in range(max_iter):
            prev = x.copy()
            for j, row in enumerate(sets):
                y = x + incr[j]
                new = self._proj_simplices(y) if row is None else self._proj_half(y, row)
                incr[j] = y - new
                x = new
            if np.max(np.abs(x - prev)) <= tol * (1.0 + np.max(np.abs(x))):
                break
        return x

    def _proj_simplices(self, y):
        out = np.empty_like(y)
        for m, a in enumerate(self.demand):
            idx = np.flatnonzero(self.owner == m)
            v = y[idx]
            u = np.sort(v)[::-1]
            css = np.cumsum(u) - a
            rho = np.nonzero(u - css / np.arange(1, len(u) + 1) > 0)[0][-1]
            theta = css[rho] / (rho + 1)
            out[idx] = np.maximum(v - theta, 0.0)
        return out

    def _proj_half(self, y, row):
        a = self.delta[row]
        excess = a @ y - self.cap[row]
        if excess <= 0:
            return y
        return y - excess * a / (a @ a)

    def check_feasible(self):
        if not self.cap_rows:
            return
        n = self.delta.shape[1]
        a_eq = np.zeros((len(self.demand), n))
        for k, m in enumerate(self.owner):
            a_eq[m, k] = 1.0
        res = linprog(np.zeros(n), A_ub=self.delta[self.cap_rows], b_ub=self.cap[self.cap_rows],
                      A_eq=a_eq, b_eq=self.demand, bounds=[(0, None)] * n, method="highs")
        if res.status != 0:
            raise Infeasible("demand exceeds rail capacity on a mandatory rail cut")


def _multipliers(prob: _Problem, f, costs):
    """Capacity multipliers making used paths cheapest (minimum total violation LP)."""
    y = prob.delta @ f
    tight = [r for r in prob.cap_rows if y[r] >= prob.cap[r] * (1 - 1e-6) - 1e-9]
    n_m = len(prob.demand)
    used = f > 1e-6 * (1.0 + prob.demand[prob.owner])
    if not tight:
        return {}, costs
    nl = len(tight)
    # variables: lambda (nl, >= 0), pi (n_m, free)
    a_rows = prob.delta[tight].T  # paths x nl
    c = np.zeros(nl + n_m)
    for k in np.flatnonzero(used):
        c[:nl] += a_rows[k]
        c[nl + prob.owner[k]] -= 1.0
    a_ub = np.zeros((len(f), nl + n_m))
    a_ub[:, :nl] = -a_rows
    a_ub[np.arange(len(f)), nl + prob.owner] = 1.0
    bounds = [(0, None)] * nl + [(None, None)] * n_m
    res = linprog(c, A_ub=a_ub, b_ub=costs, bounds=bounds, method="highs")
    lam = res.x[:nl] if res.status == 0 else np.zeros(nl)
    gen = costs + a_rows @ lam
    return {prob.links[r].key: float(v) for r, v in zip(tight, lam)}, gen


def solve_ue(graph: MobilityGraph, state: NetworkState, requests: Sequence[TravelRequest],
             hop_bound: int = 8, params: ServiceParams | None = None,
             max_iter: int = 5000, tol: float = 1e-10) -> UEResult:
    params = params or ServiceParams()
    if len(graph.node_ids) > MAX_NODES:
        raise TooLarge(f"UE oracle handles at most {MAX_NODES} nodes")
    paths, links = enumerate_paths(graph, state, requests, hop_bound, params)
    demand = np.array([float(r.trips) for r in requests])
    prob = _Problem(links, paths, demand, params)
    prob.check_feasible()
    f = np.concatenate([np.full(len(ps), a / len(ps)) for ps, a in zip(paths.paths, demand)])
    f = prob.project(f)
    obj = prob.beckmann(f)
    history = [obj]
    step = 1.0
    for _ in range(max_iter):
        g = prob.path_cost(f)
        while True:
            cand = prob.project(f - step * g)
            d = cand - f
            new_obj = prob.beckmann(cand)
            if new_obj <= obj + g @ d + (d @ d) / (2 * step) + 1e-12 * abs(obj):
                break
            step *= 0.5
            if step < 1e-14:
                cand, new_obj, d = f, obj, np.zeros_like(f)
                break
        moved = float(np.max(np.abs(d))) if d.size else 0.0
        if new_obj <= obj:
            f, obj = cand, new_obj
            history.append(obj)
        if moved <= tol * (1.0 + float(demand.max())):
            break
        step = min(step * 2.0, 1e6)
    costs = prob.path_cost(f)
    lam, gen = _multipliers(prob, f, costs)
    gap = 0.0
    for m in range(len(demand)):
        idx = np.flatnonzero(prob.owner == m)
        used = idx[f[idx] > 1e-6 * (1.0 + demand[m])]
        lo = float(gen[idx].min())
        if used.size and lo > 0:
            gap = max(gap, (float(gen[used].max()) - lo) / lo)
    y = prob.delta @ f
    edge_flows = {l.key: float(v) for l, v in zip(links, y)}
    split = [f[np.flatnonzero(prob.owner == m)] for m in range(len(demand))]
    return UEResult(split, edge_flows, gap, history, paths, lam)
