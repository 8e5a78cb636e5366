"""One design year of the two-stage game.

Stage 1: each authority designs its own rail edges; iterated best response
(authority 1, then 2) until neither changes its action.
Stage 2: a pooled budget funds a joint design over every rail edge,
crossing edges included, on top of the Stage-1 network.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .assign import FlowModel
from .errors import ZeroCoinvestment
from .metrics import ObjectiveModel, RegionMetrics
from .network import DesignAction, MobilityGraph, NetworkState, apply_action
from .optimizer import DesignProblem, best_deviation, solve
from .params import ServiceParams

AUTHORITIES = (1, 2)


@dataclass
class GameContext:
    """Everything a design year needs: network, demand for that year, and solver settings."""

    graph: MobilityGraph
    flow: FlowModel
    objective: ObjectiveModel
    params: ServiceParams = field(default_factory=ServiceParams)
    seed: int = 0
    restarts: int = 5
    method: str = "auto"
    max_rounds: int = 50

    def _full(self, action: DesignAction) -> tuple[np.ndarray, np.ndarray]:
        ri = self.graph.rail_index
        x = np.zeros(len(ri), bool)
        s = np.zeros(len(ri), np.int64)
        for e in action.builds:
            x[ri[e]] = True
        for e, v in action.upgrades.items():
            s[ri[e]] = v
        return x, s

    def batch_objective(self, regions: Sequence[int], base: NetworkState, fixed: DesignAction,
                        edge_ids: Sequence[int], offset: float = 0.0):
        """Objective over actions on ``edge_ids`` added to ``base`` (which already contains ``fixed``).

        ``fixed`` is this year's spend already committed; it is charged to the
        regions' profit alongside the candidate action.
        """
        idx = np.array([self.graph.rail_index[e] for e in sorted(edge_ids)], dtype=np.int64)
        bx, bs = base.connectivity, base.frequency
        fx, fs = self._full(fixed)

        def f(x: np.ndarray, s: np.ndarray) -> np.ndarray:
            k = x.shape[1]
            X = np.repeat(bx[:, None], k, axis=1)
            S = np.repeat(bs[:, None], k, axis=1)
            X[idx] |= x
            S[idx] += s
            xa = np.repeat(fx[:, None], k, axis=1)
            sa = np.repeat(fs[:, None], k, axis=1)
            xa[idx] |= x
            sa[idx] += s
            _, rail, alt, _ = self.flow.evaluate(X, S)
            total = np.zeros(k)
            for r in regions:
                total += self.objective.payoff(r, rail, alt, xa, sa)
            return total - offset

        return f

    def metrics(self, state: NetworkState, action: DesignAction) -> dict[int, RegionMetrics]:
        """Region metrics of ``state`` where ``action`` is this year's spend."""
        _, rail, alt, _ = self.flow.evaluate(state.connectivity, state.frequency)
        x, s = self._full(action)
        return {i: self.objective.metrics(i, rail[:, 0], alt[:, 0], x, s) for i in AUTHORITIES}

    def payoffs(self, state: NetworkState, action: DesignAction) -> dict[int, float]:
        return {i: m.objective for i, m in self.metrics(state, action).items()}


@dataclass
class StageOneResult:
    actions: dict[int, DesignAction]
    payoffs: dict[int, float]
    state_after: NetworkState
    converged: bool
    rounds: int

    @property
    def combined(self) -> DesignAction:
        return self.actions[1] + self.actions[2]


@dataclass
class StageTwoResult:
    joint_action: DesignAction
    surplus: float
    state_after: NetworkState
    cir: float
    roc: float | None
    pooled_budget: float


def _stage1_budget(beta: float, budget: float) -> float:
    if not 0.0 <= beta <= 1.0:
        raise ValueError(f"co-investment ratio {beta} outside [0, 1]")
    return (1.0 - beta) * budget


def _apply(ctx: GameContext, state: NetworkState, action: DesignAction, advance=False) -> NetworkState:
    return apply_action(state, action, ctx.params.s_max, advance_year=advance)


def response_problem(ctx: GameContext, authority: int, base_state: NetworkState,
                     opponent: DesignAction, beta: float, budget: float) -> DesignProblem:
    edges = ctx.graph.region_rail_ids(authority)
    with_opp = _apply(ctx, base_state, opponent)
    f = ctx.batch_objective((authority,), with_opp, opponent, edges)
    return DesignProblem.build(ctx.graph, edges, _stage1_budget(beta, budget), with_opp, f,
                               ctx.params, method=ctx.method)


def best_response(ctx: GameContext, authority: int, base_state: NetworkState,
                  opponent: DesignAction, beta: float, budget: float,
                  incumbent: DesignAction | None = None) -> DesignAction:
    """Best design of ``authority`` against a fixed opponent action.

    ``incumbent`` (the authority's current action) is kept when the search
    finds nothing strictly better.
    """
    problem = response_problem(ctx, authority, base_state, opponent, beta, budget)
    action, _ = solve(problem, seed=ctx.seed, restarts=ctx.restarts, start=incumbent)
    return action


def stage1_equilibrium(ctx: GameContext, base_state: NetworkState, budgets: Mapping[int, float],
                       betas: Mapping[int, float]) -> StageOneResult:
    """Sequential best response from empty actions until a fixed point, a cycle or the round cap."""
    acts = {1: DesignAction(), 2: DesignAction()}
    seen = {(acts[1], acts[2])}
    cache: dict[tuple, DesignAction] = {}

    def br(i, opp, own):
        key = (i, opp, own)
        if key not in cache:
            cache[key] = best_response(ctx, i, base_state, opp, betas[i], budgets[i],
                                       incumbent=None if own.is_empty else own)
        return cache[key]

    converged = False
    rounds = 0
    while rounds < ctx.max_rounds:
        rounds += 1
        a1 = br(1, acts[2], acts[1])
        a2 = br(2, a1, acts[2])
        if a1 == acts[1] and a2 == acts[2]:
            converged = True
            break
        acts = {1: a1, 2: a2}
        if (a1, a2) in seen:
            break
        seen.add((a1, a2))
    combined = acts[1] + acts[2]
    after = apply_action(base_state, combined, ctx.params.s_max)
    return StageOneResult(acts, ctx.payoffs(after, combined), after, converged, rounds)


def verify_equilibrium(ctx: GameContext, base_state: NetworkState, actions: Mapping[int, DesignAction],
                       budgets: Mapping[int, float], betas: Mapping[int, float]) -> bool:
    """Exhaustively check that no authority has a strictly better unilateral deviation."""
    combined = actions[1] + actions[2]
    current = ctx.payoffs(_apply(ctx, base_state, combined), combined)
    for i in AUTHORITIES:
        opp = actions[2 if i == 1 else 1]
        problem = response_problem(ctx, i, base_state, opp, betas[i], budgets[i])
        best = best_deviation(problem)
        if best > current[i] + 1e-9 * (1.0 + abs(current[i])):
            return False
    return True


def coinvest_problem(ctx: GameContext, base_state: NetworkState, stage1: StageOneResult,
                     budgets: Mapping[int, float], betas: Mapping[int, float]) -> DesignProblem:
    """Pooled-budget design over every rail edge; the objective is the joint gain over Stage 1."""
    for i in AUTHORITIES:
        _stage1_budget(betas[i], budgets[i])
    pooled = sum(betas[i] * budgets[i] for i in AUTHORITIES)
    s1_total = sum(stage1.payoffs[i] for i in AUTHORITIES)
    s1_state = _apply(ctx, base_state, stage1.combined)
    edges = ctx.graph.rail_ids
    f = ctx.batch_objective(AUTHORITIES, s1_state, stage1.combined, edges, offset=s1_total)
    return DesignProblem.build(ctx.graph, edges, pooled, s1_state, f, ctx.params, method=ctx.method)


def stage2_coinvest(ctx: GameContext, base_state: NetworkState, stage1: StageOneResult,
                    budgets: Mapping[int, float], betas: Mapping[int, float]) -> StageTwoResult:
    """Joint design with the pooled budget; surplus is measured net of Stage-1 payoffs."""
    problem = coinvest_problem(ctx, base_state, stage1, budgets, betas)
    pooled = problem.budget
    total_budget = sum(budgets[i] for i in AUTHORITIES)
    cir = pooled / total_budget if total_budget > 0 else 0.0
    action, value = (DesignAction(), 0.0) if pooled <= 0 else solve(problem, seed=ctx.seed,
                                                                     restarts=ctx.restarts)
    if value <= 0 or action.is_empty:
        action, value = DesignAction(), 0.0
    after = apply_action(base_state, stage1.combined + action, ctx.params.s_max)
    roc = value / pooled if pooled > 0 else None
    return StageTwoResult(action, value, after, cir, roc, pooled)


@dataclass(frozen=True)
class YearLedger:
    """Per-year inputs to the horizon CIR/ROC accounting."""

    betas: tuple[float, float]
    budgets: tuple[float, float]
    realized: float  # sum of Stage-1 payoffs plus realized co-investment surplus
    baseline: float  # sum of no-mechanism payoffs


def delta_f_co(history: Sequence[YearLedger]) -> float:
    return sum(y.realized for y in history) - sum(y.baseline for y in history)


def roc_cir(history: Sequence[YearLedger]) -> tuple[float, float]:
    pooled = sum(b * B for y in history for b, B in zip(y.betas, y.budgets))
    total = sum(B for y in history for B in y.budgets)
    cir = pooled / total if total > 0 else 0.0
    if pooled <= 0:
        raise ZeroCoinvestment(cir)
    return cir, delta_f_co(history) / pooled
