"""Budgeted rail design: choose builds and frequency upgrades over an edge set.

The objective is a black box evaluated on batches of candidate actions, so the
same engine serves a single authority and the pooled coalition. Actions are
encoded as two ``(n_edges, K)`` arrays: build flags and frequency increments.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import islice
from typing import Callable, Iterator

import numpy as np

from .errors import TooLarge
from .network import DesignAction, MobilityGraph, NetworkState
from .params import ServiceParams

BatchObjective = Callable[[np.ndarray, np.ndarray], np.ndarray]

EXACT_EDGE_LIMIT = 12
EXACT_FREQ_LIMIT = 3
_BATCH = 2048


def action_cost(action: DesignAction, graph: MobilityGraph,
                params: ServiceParams | None = None) -> float:
    params = params or ServiceParams()
    total = 0.0
    for e in action.edges():
        length = graph.rail_edges[e].length
        total += (params.base_cost * length * (e in action.builds)
                  + params.capacity_cost * length * action.upgrades.get(e, 0))
    return total


@dataclass
class DesignProblem:
    edge_ids: tuple[int, ...]
    budget: float
    connected: np.ndarray
    frequency: np.ndarray
    build_cost: np.ndarray
    freq_cost: np.ndarray
    s_max: int
    objective: BatchObjective
    method: str = "auto"  # "auto", "exact" or "local"
    exact_edge_limit: int = EXACT_EDGE_LIMIT
    exact_freq_limit: int = EXACT_FREQ_LIMIT
    evaluations: int = field(default=0, repr=False)

    def __post_init__(self):
        if self.budget < 0:
            raise ValueError("budget must be non-negative")
        self.edge_ids = tuple(self.edge_ids)
        self.connected = np.asarray(self.connected, dtype=bool)
        self.frequency = np.asarray(self.frequency, dtype=np.int64)

    @classmethod
    def build(cls, graph: MobilityGraph, edge_ids, budget: float, base_state: NetworkState,
              objective: BatchObjective, params: ServiceParams | None = None, **kw) -> "DesignProblem":
        params = params or ServiceParams()
        edge_ids = tuple(sorted(edge_ids))
        idx = [base_state.edge_ids.index(e) for e in edge_ids]
        lengths = np.array([graph.rail_edges[e].length for e in edge_ids])
        return cls(edge_ids, budget, base_state.connectivity[idx], base_state.frequency[idx],
                   params.base_cost * lengths, params.capacity_cost * lengths, params.s_max,
                   objective, **kw)

    @property
    def headroom(self) -> np.ndarray:
        """Largest frequency increment available on each edge."""
        return self.s_max - self.frequency

    def evaluate(self, x: np.ndarray, s: np.ndarray) -> np.ndarray:
        self.evaluations += x.shape[1]
        return np.asarray(self.objective(x, s), dtype=float)

    def cost(self, x: np.ndarray, s: np.ndarray) -> np.ndarray:
        return self.build_cost @ x + self.freq_cost @ s

    def within_budget(self, c) -> np.ndarray:
        return c <= self.budget * (1 + 1e-12) + 1e-9

    def feasible(self, x: np.ndarray, s: np.ndarray) -> np.ndarray:
        x = np.asarray(x, bool)
        ok = self.within_budget(self.cost(x, s))
        ok &= np.all(s <= self.headroom[:, None], axis=0) & np.all(s >= 0, axis=0)
        ok &= ~np.any(x & self.connected[:, None], axis=0)
        ok &= ~np.any((s > 0) & ~(x | self.connected[:, None]), axis=0)
        return ok

    def to_action(self, x, s) -> DesignAction:
        return DesignAction.from_arrays(self.edge_ids, np.asarray(x, bool), np.asarray(s))

    def to_arrays(self, action: DesignAction) -> tuple[np.ndarray, np.ndarray]:
        x = np.array([e in action.builds for e in self.edge_ids], dtype=bool)
        s = np.array([action.upgrades.get(e, 0) for e in self.edge_ids], dtype=np.int64)
        return x, s

    def value(self, action: DesignAction) -> float:
        x, s = self.to_arrays(action)
        return float(self.evaluate(x[:, None], s[:, None])[0])

    def do_nothing_value(self) -> float:
        n = len(self.edge_ids)
        return float(self.evaluate(np.zeros((n, 1), bool), np.zeros((n, 1), np.int64))[0])

    def is_exact_scale(self) -> bool:
        headroom = int(self.headroom.max()) if len(self.edge_ids) else 0
        return len(self.edge_ids) <= self.exact_edge_limit and headroom <= self.exact_freq_limit


def _improves(new: float, old: float) -> bool:
    return new > old + 1e-9 * (1.0 + abs(old))


def enumerate_actions(problem: DesignProblem) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Yield every feasible action in lexicographic order, in batches.

    Depth-first over edges with per-edge options ordered (no build, build with
    s = 0, 1, ...) or (s = 0, 1, ...) for already-connected edges; a branch is
    cut as soon as its spend exceeds the budget, since later edges can only add
    cost.
    """
    n = len(problem.edge_ids)
    opts = []
    for k in range(n):
        h = int(problem.headroom[k])
        if problem.connected[k]:
            choices = [(0, s) for s in range(h + 1)]
        else:
            choices = [(0, 0)] + [(1, s) for s in range(h + 1)]
        opts.append([(b, s, b * problem.build_cost[k] + s * problem.freq_cost[k]) for b, s in choices])
    limit = problem.budget * (1 + 1e-12) + 1e-9
    cur = [(0, 0)] * n

    def leaves(k: int, spent: float):
        if k == n:
            yield tuple(cur)
            return
        for b, s, c in opts[k]:
            # options within an edge are sorted by cost
            if spent + c > limit:
                break
            cur[k] = (b, s)
            yield from leaves(k + 1, spent + c)
        cur[k] = (0, 0)

    it = leaves(0, 0.0)
    while True:
        chunk = list(islice(it, _BATCH))
        if not chunk:
            return
        arr = np.array(chunk, dtype=np.int64).reshape(len(chunk), n, 2)
        yield arr[:, :, 0].T.astype(bool), arr[:, :, 1].T.copy()


def solve_exact(problem: DesignProblem) -> tuple[DesignAction, float]:
    """Globally optimal action by exhaustive branch-and-bound enumeration."""
    if not problem.is_exact_scale():
        raise TooLarge(f"{len(problem.edge_ids)} edges / headroom {int(problem.headroom.max())} "
                       f"exceeds exact limits ({problem.exact_edge_limit}, {problem.exact_freq_limit})")
    best_val, best = -np.inf, None
    for x, s in enumerate_actions(problem):
        vals = problem.evaluate(x, s)
        for k in range(vals.shape[0]):
            if best is None or _improves(vals[k], best_val):
                best_val, best = float(vals[k]), (x[:, k].copy(), s[:, k].copy())
    return problem.to_action(*best), best_val


def best_deviation(problem: DesignProblem) -> float:
    """Highest objective over all feasible actions (exhaustive)."""
    return solve_exact(problem)[1]


def _levels(headroom: int) -> list[int]:
    """Frequencies tried when building an edge: powers of two up to the headroom, and the headroom."""
    out, v = [], 1
    while v < headroom:
        out.append(v)
        v *= 2
    if headroom >= 1:
        out.append(headroom)
    return out


class _Climber:
    def __init__(self, problem: DesignProblem):
        self.p = problem
        self.n = len(problem.edge_ids)

    def neighbours(self, x: np.ndarray, s: np.ndarray, greedy: bool, swaps: bool):
        p, n = self.p, self.n
        cols_x, cols_s = [], []
        conn = x | p.connected
        head = p.headroom
        if swaps:
            built = np.flatnonzero(x)
            free = np.flatnonzero(~conn)
            for a in built:
                for b in free:
                    nx, ns = x.copy(), s.copy()
                    nx[a], ns[a] = False, 0
                    nx[b], ns[b] = True, max(1, min(int(s[a]), int(head[b])))
                    cols_x.append(nx)
                    cols_s.append(ns)
        else:
            for k in range(n):
                if not conn[k]:
                    # a new edge may only pay off above the lowest frequency
                    for level in _levels(int(head[k])):
                        nx, ns = x.copy(), s.copy()
                        nx[k], ns[k] = True, level
                        cols_x.append(nx)
                        cols_s.append(ns)
                if conn[k] and s[k] < head[k]:
                    nx, ns = x.copy(), s.copy()
                    ns[k] += 1
                    cols_x.append(nx)
                    cols_s.append(ns)
                if greedy:
                    continue
                if x[k]:
                    nx, ns = x.copy(), s.copy()
                    nx[k], ns[k] = False, 0
                    cols_x.append(nx)
                    cols_s.append(ns)
                if s[k] > 0:
                    nx, ns = x.copy(), s.copy()
                    ns[k] -= 1
                    cols_x.append(nx)
                    cols_s.append(ns)
        if not cols_x:
            return None
        X = np.array(cols_x).T
        S = np.array(cols_s).T
        keep = p.within_budget(p.cost(X, S))
        if not keep.any():
            return None
        return X[:, keep], S[:, keep]

    def step(self, x, s, val, greedy=False, swaps=False):
        nb = self.neighbours(x, s, greedy, swaps)
        if nb is None:
            return None
        X, S = nb
        vals = self.p.evaluate(X, S)
        if greedy:
            # best gain per CHF among improving moves
            gain = vals - val
            spend = np.maximum(self.p.cost(X, S) - self.p.cost(x[:, None], s[:, None])[0], 1e-9)
            ok = np.array([_improves(v, val) for v in vals])
            if not ok.any():
                return None
            k = int(np.argmax(np.where(ok, gain / spend, -np.inf)))
        else:
            k = int(np.argmax(vals))
        if _improves(vals[k], val):
            return X[:, k].copy(), S[:, k].copy(), float(vals[k])
        return None

    def climb(self, x, s, val, greedy=False):
        while True:
            nxt = self.step(x, s, val, greedy=greedy)
            if nxt is None and not greedy:
                nxt = self.step(x, s, val, swaps=True)
            if nxt is None:
                return x, s, val
            x, s, val = nxt


def solve_local(problem: DesignProblem, seed: int = 0, restarts: int = 5,
                start: DesignAction | None = None) -> tuple[DesignAction, float]:
    """Seeded hill climbing from a greedy start, with perturbation restarts.

    When ``start`` is given it is climbed as well and kept unless the fresh
    search is strictly better; this anchors repeated solves (best-response
    iteration) to the incumbent among near-equal local optima.
    """
    n = len(problem.edge_ids)
    rng = np.random.default_rng(seed)
    x0 = np.zeros(n, bool)
    s0 = np.zeros(n, np.int64)
    base = problem.do_nothing_value()
    if n == 0:
        return DesignAction(), base
    climber = _Climber(problem)
    x, s, val = climber.climb(x0, s0, base, greedy=True)
    x, s, val = climber.climb(x, s, val)
    best = (x, s, val)
    for _ in range(restarts):
        bx, bs, _ = best
        px, ps = bx.copy(), bs.copy()
        built = np.flatnonzero(px)
        if built.size:
            drop = rng.choice(built, size=min(built.size, int(rng.integers(1, 4))), replace=False)
            px[drop] = False
            ps[drop] = 0
        upgraded = np.flatnonzero(ps > 0)
        if upgraded.size:
            k = int(rng.choice(upgraded))
            ps[k] = int(rng.integers(0, ps[k] + 1))
        free = np.flatnonzero(~(px | problem.connected) & (problem.headroom >= 1))
        if free.size:
            k = int(rng.choice(free))
            px[k], ps[k] = True, 1
        if not problem.feasible(px[:, None], ps[:, None])[0]:
            px, ps = bx.copy(), bs.copy()
        pval = float(problem.evaluate(px[:, None], ps[:, None])[0])
        cx, cs, cval = climber.climb(px, ps, pval)
        if _improves(cval, best[2]):
            best = (cx, cs, cval)
    if start is not None:
        sx, ss = problem.to_arrays(start)
        if problem.feasible(sx[:, None], ss[:, None])[0]:
            sval = float(problem.evaluate(sx[:, None], ss[:, None])[0])
            cand = climber.climb(sx, ss, sval)
            if not _improves(best[2], cand[2]):
                best = cand
    x, s, val = best
    if not val >= base:
        return DesignAction(), base
    return problem.to_action(x, s), val


def solve(problem: DesignProblem, seed: int = 0, restarts: int = 5,
          start: DesignAction | None = None) -> tuple[DesignAction, float]:
    method = problem.method
    if method == "exact" or (method == "auto" and problem.is_exact_scale()):
        return solve_exact(problem)
    return solve_local(problem, seed=seed, restarts=restarts, start=start)
