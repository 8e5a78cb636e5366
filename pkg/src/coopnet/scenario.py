"""Multi-year runs, beta sweeps and the heterogeneous-region suite.

A run walks the horizon year by year: demand grows, Stage 1 settles, the
pooled budget is co-invested, and the surplus is shared by bargaining when the
gain over the no-mechanism trajectory is positive. The no-mechanism trajectory
is the all-zero beta schedule run through the same code path.

Sweeps share work through a prefix tree: every schedule that agrees on the
first k years reuses the same k year computations.
"""
from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np

from .assign import DEFAULT_MU, FlowModel, RouteTable
from .bargain import PayoffTriple, bargaining_feasible, nbs_allocate
from .demand import DEFAULT_BOUNDS, DemandModel, check_bounds, demand_at_year, generate, scale_intra
from .game import AUTHORITIES, GameContext, stage1_equilibrium, stage2_coinvest
from .metrics import ObjectiveModel, RegionMetrics
from .network import DesignAction, MobilityGraph, NetworkState, build_sioux_falls
from .params import BETA_GRID, ServiceParams, Weights

Schedule = tuple[tuple[float, float], ...]


@dataclass(frozen=True)
class ScenarioConfig:
    name: str = "default"
    seed: int = 0
    horizon: int = 3
    budget: float = 1e5  # CHF per authority per year before the ratio split
    budget_ratio: tuple[float, float] = (1.0, 1.0)  # region 1 : region 2
    # intra-regional totals, region 1 : region 2; None keeps the generated volumes
    demand_ratio: tuple[float, float] | None = None
    betas: Schedule | None = None  # per year (beta_1, beta_2); None means all zero
    beta_grid: tuple[float, ...] = BETA_GRID
    weights: Weights = field(default_factory=Weights)
    mu: float = DEFAULT_MU
    bounds: Mapping[str, tuple[int, int]] = field(default_factory=lambda: dict(DEFAULT_BOUNDS))
    growth_rate: float = 0.015
    params: ServiceParams = field(default_factory=ServiceParams)
    method: str = "auto"
    restarts: int = 5
    network: str | None = None  # path to a network file; None means bundled Sioux Falls

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be at least one year")
        if self.budget < 0:
            raise ValueError("budgets must be non-negative")
        if min(self.budget_ratio) <= 0 or (self.demand_ratio is not None and min(self.demand_ratio) <= 0):
            raise ValueError("ratios must be positive")
        if self.mu <= 0:
            raise ValueError("logit scale must be positive")
        check_bounds(self.bounds)
        if any(not 0.0 <= b <= 1.0 for b in self.beta_grid):
            raise ValueError("beta grid values must lie in [0, 1]")
        if self.betas is not None:
            sched = tuple((float(a), float(b)) for a, b in self.betas)
            if len(sched) != self.horizon:
                raise ValueError(f"beta schedule has {len(sched)} years, horizon is {self.horizon}")
            if any(not 0.0 <= v <= 1.0 for pair in sched for v in pair):
                raise ValueError("co-investment ratios must lie in [0, 1]")
            object.__setattr__(self, "betas", sched)

    @property
    def schedule(self) -> Schedule:
        return self.betas if self.betas is not None else ((0.0, 0.0),) * self.horizon

    def budgets(self) -> dict[int, float]:
        """Per-authority yearly budget; the two-authority total stays 2 * budget."""
        r1, r2 = self.budget_ratio
        total = 2.0 * self.budget
        return {1: total * r1 / (r1 + r2), 2: total * r2 / (r1 + r2)}

    def with_(self, **changes) -> "ScenarioConfig":
        return replace(self, **changes)


@dataclass(frozen=True)
class YearRecord:
    year: int
    betas: tuple[float, float]
    no_mech: tuple[float, float]  # F^t_i from the no-mechanism trajectory
    stage1: tuple[float, float]  # F^{1t}_i
    surplus: float  # F^{2t}
    shares: tuple[float, float]  # q_i
    payoffs: tuple[float, float]  # v_i
    accepted: bool
    converged: bool
    stage1_actions: tuple[DesignAction, DesignAction]
    joint_action: DesignAction
    totals: RegionMetrics  # whole network, realized design of the year
    pooled: float
    network: NetworkState  # realized layout at the end of the year

    @property
    def realized(self) -> float:
        return sum(self.stage1) + (self.surplus if self.accepted else 0.0)


@dataclass(frozen=True)
class RunRecord:
    name: str
    seed: int
    mu: float
    betas: Schedule
    years: tuple[YearRecord, ...]
    baseline: tuple[YearRecord, ...]
    delta_f_co: float
    cir: float
    roc: float | None
    d_emissions: float
    d_travel_cost: float
    d_profit: float
    final_state: NetworkState

    @property
    def years_cooperated(self) -> int:
        return sum(1 for b in self.betas if max(b) > 0)

    @property
    def accepted_any(self) -> bool:
        return any(y.accepted for y in self.years)

    @property
    def converged(self) -> bool:
        return all(y.converged for y in self.years)

    def schedule_rows(self) -> list[tuple[int, str, int, int, int]]:
        """(year, stage, edge, built, frequency increment) for every funded edge."""
        rows = []
        for y in self.years:
            parts = [("stage1-r1", y.stage1_actions[0]), ("stage1-r2", y.stage1_actions[1])]
            if y.accepted:
                parts.append(("stage2", y.joint_action))
            for stage, act in parts:
                for e in act.edges():
                    rows.append((y.year, stage, e, int(e in act.builds), int(act.upgrades.get(e, 0))))
        return rows


class Setting:
    """Per-configuration immutable inputs: graph, demand and per-year flow models."""

    def __init__(self, config: ScenarioConfig, graph: MobilityGraph | None = None):
        self.config = config
        if graph is None:
            if config.network:
                from .netfile import read_network
                graph = read_network(config.network, config.params)
            else:
                graph = build_sioux_falls(config.params)
        self.graph = graph
        demand = generate(graph, config.bounds, config.seed, config.growth_rate)
        if config.demand_ratio is not None:
            demand = scale_intra(demand, config.demand_ratio)
        self.demand: DemandModel = demand
        self.objective = ObjectiveModel(graph, config.params, config.weights)
        self._contexts: dict[int, GameContext] = {}

    @cached_property
    def _base_flow(self) -> FlowModel:
        reqs = demand_at_year(self.demand, 1)
        return FlowModel.for_requests(self.graph, reqs, self.config.params, self.config.mu,
                                      RouteTable(self.graph))

    def context(self, year: int) -> GameContext:
        if year not in self._contexts:
            trips = [r.trips for r in demand_at_year(self.demand, year)]
            c = self.config
            self._contexts[year] = GameContext(self.graph, self._base_flow.with_trips(trips),
                                               self.objective, c.params, seed=c.seed,
                                               restarts=c.restarts, method=c.method)
        return self._contexts[year]


def _totals(metrics: Mapping[int, RegionMetrics]) -> RegionMetrics:
    return RegionMetrics(sum(m.emissions for m in metrics.values()),
                         sum(m.travel_cost for m in metrics.values()),
                         sum(m.profit for m in metrics.values()),
                         sum(m.objective for m in metrics.values()))


def play_year(setting: Setting, year: int, state: NetworkState, betas: tuple[float, float],
              no_mech: tuple[float, float] | None) -> tuple[YearRecord, NetworkState]:
    """One design year from ``state``; ``no_mech`` None marks the no-mechanism trajectory itself."""
    ctx = setting.context(year)
    budgets = setting.config.budgets()
    bmap = {1: betas[0], 2: betas[1]}
    s1 = stage1_equilibrium(ctx, state, budgets, bmap)
    s2 = stage2_coinvest(ctx, state, s1, budgets, bmap)
    f1 = (s1.payoffs[1], s1.payoffs[2])
    f = f1 if no_mech is None else no_mech
    triple = PayoffTriple(f, f1, s2.surplus)
    accepted = False
    shares, payoffs = (0.0, 0.0), f1
    # nothing to share without a co-investment surplus, even if Stage 1 beats the baseline
    if s2.surplus > 0 and bargaining_feasible(triple):
        alloc = nbs_allocate(triple)
        if all(v > n for v, n in zip(alloc.payoffs, f)):
            accepted = True
            shares, payoffs = alloc.shares, alloc.payoffs
    if accepted:
        realized_action = s1.combined + s2.joint_action
        after = s2.state_after
    else:
        realized_action = s1.combined
        after = s1.state_after
    totals = _totals(ctx.metrics(after, realized_action))
    record = YearRecord(year, betas, f, f1, s2.surplus, shares, payoffs, accepted, s1.converged,
                        (s1.actions[1], s1.actions[2]), s2.joint_action, totals, s2.pooled_budget,
                        after)
    return record, after


class _Tree:
    """Prefix-memoized year computations shared by every schedule of one setting."""

    def __init__(self, setting: Setting):
        self.setting = setting
        self.nodes: dict[Schedule, tuple[YearRecord, NetworkState]] = {}
        self.baseline = self._baseline()

    def _baseline(self) -> tuple[YearRecord, ...]:
        state = NetworkState.empty(self.setting.graph)
        out = []
        zero = (0.0, 0.0)
        for t in range(1, self.setting.config.horizon + 1):
            rec, state = play_year(self.setting, t, state, zero, None)
            out.append(rec)
            self.nodes[(zero,) * t] = (rec, state)
        return tuple(out)

    def node(self, prefix: Schedule) -> tuple[YearRecord, NetworkState]:
        if prefix not in self.nodes:
            t = len(prefix)
            state = (NetworkState.empty(self.setting.graph) if t == 1
                     else self.node(prefix[:-1])[1])
            base = self.baseline[t - 1]
            no_mech = base.stage1
            self.nodes[prefix] = play_year(self.setting, t, state, prefix[-1], no_mech)
        return self.nodes[prefix]

    def run(self, schedule: Schedule) -> RunRecord:
        schedule = tuple((float(a), float(b)) for a, b in schedule)
        years = tuple(self.node(schedule[:t])[0] for t in range(1, len(schedule) + 1))
        final_state = self.node(schedule)[1]
        return _summarize(self.setting.config, schedule, years, self.baseline, final_state)


def _summarize(config: ScenarioConfig, schedule: Schedule, years, baseline, final_state) -> RunRecord:
    budgets = config.budgets()
    pooled = sum(b[0] * budgets[1] + b[1] * budgets[2] for b in schedule)
    total = sum(budgets.values()) * len(schedule)
    cir = pooled / total if total > 0 else 0.0
    dfco = sum(y.realized for y in years) - sum(sum(y.no_mech) for y in years)
    roc = dfco / pooled if pooled > 0 else None
    last, base = years[-1].totals, baseline[len(years) - 1].totals
    return RunRecord(config.name, config.seed, config.mu, schedule, tuple(years), tuple(baseline), dfco, cir, roc,
                     last.emissions - base.emissions, last.travel_cost - base.travel_cost,
                     last.profit - base.profit, final_state)


def run_scenario(config: ScenarioConfig, setting: Setting | None = None) -> RunRecord:
    setting = setting or Setting(config)
    return _Tree(setting).run(config.schedule)


def schedules(grid: Sequence[float], horizon: int) -> list[Schedule]:
    """Every shared-beta schedule over ``grid``, in lexicographic grid order."""
    return [tuple((b, b) for b in combo) for combo in itertools.product(grid, repeat=horizon)]


def _sweep_branch(config: ScenarioConfig, first: float, grid: tuple[float, ...]) -> list[RunRecord]:
    tree = _Tree(Setting(config))
    return [tree.run(((first, first),) + rest)
            for rest in schedules(grid, config.horizon - 1)]


def sweep(config: ScenarioConfig, grid: Sequence[float] | None = None, jobs: int = 1,
          setting: Setting | None = None) -> list[RunRecord]:
    """Runs every schedule of the grid; output order is independent of ``jobs``.

    Worker processes rebuild the setting from ``config``, so a supplied
    ``setting`` forces a serial run.
    """
    grid = tuple(config.beta_grid if grid is None else grid)
    if any(not 0.0 <= b <= 1.0 for b in grid):
        raise ValueError("beta grid values must lie in [0, 1]")
    if jobs > 1 and len(grid) > 1 and setting is None:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = pool.map(_sweep_branch, [config] * len(grid), grid, [grid] * len(grid))
            return [r for part in parts for r in part]
    tree = _Tree(setting or Setting(config))
    return [tree.run(s) for s in schedules(grid, config.horizon)]


def highest_return(records: Sequence[RunRecord]) -> RunRecord | None:
    best = None
    for r in records:
        if r.accepted_any and (best is None or r.delta_f_co > best.delta_f_co):
            best = r
    return best


def most_efficient(records: Sequence[RunRecord]) -> RunRecord | None:
    best = None
    for r in records:
        if r.accepted_any and r.roc is not None and (best is None or r.roc > best.roc):
            best = r
    return best


# Heterogeneous regions: (name, fund ratio, intra-demand ratio), ratios given as
# region 2 : region 1 so "higher fund" and "less demand" describe region 2.
HETERO_ROWS = (
    ("Homogeneous", (1, 1), (1, 1)),
    ("Higher fund, Equal demand", (3, 2), (1, 1)),
    ("Equal fund, Less demand", (1, 1), (2, 3)),
    ("Higher fund, Higher demand", (3, 2), (3, 2)),
    ("Equal fund, Higher demand", (1, 1), (3, 2)),
    ("Higher fund, Less demand", (3, 2), (2, 3)),
)


@dataclass(frozen=True)
class RocSummary:
    name: str
    budget_ratio: tuple[float, float]  # region 1 : region 2
    demand_ratio: tuple[float, float] | None
    n: int
    minimum: float
    q1: float
    median: float
    q3: float
    maximum: float


def roc_summary(name: str, config: ScenarioConfig, records: Sequence[RunRecord]) -> RocSummary:
    rocs = np.array([r.roc for r in records if r.roc is not None], dtype=float)
    if rocs.size == 0:
        stats = [math.nan] * 5
    else:
        stats = [float(v) for v in np.percentile(rocs, [0, 25, 50, 75, 100])]
    demand = None if config.demand_ratio is None else tuple(config.demand_ratio)
    return RocSummary(name, tuple(config.budget_ratio), demand, int(rocs.size), *stats)


def hetero_config(base: ScenarioConfig, name: str, fund: Sequence[float], demand: Sequence[float]) -> ScenarioConfig:
    return base.with_(name=name, budget_ratio=(float(fund[1]), float(fund[0])),
                      demand_ratio=(float(demand[1]), float(demand[0])))


def heterogeneous_suite(base: ScenarioConfig, jobs: int = 1,
                        reuse: Mapping[str, Sequence[RunRecord]] | None = None
                        ) -> list[tuple[str, list[RunRecord], RocSummary]]:
    """Full sweep for each heterogeneous row; ``reuse`` maps row names to already computed sweeps."""
    out = []
    for name, fund, demand in HETERO_ROWS:
        cfg = hetero_config(base, name, fund, demand)
        if reuse and name in reuse:
            records = list(reuse[name])
        else:
            records = sweep(cfg, jobs=jobs)
        out.append((name, records, roc_summary(name, cfg, records)))
    return out
