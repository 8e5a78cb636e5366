"""Per-region emissions, travel cost, profit and the weighted stage objective.

Crossing edges are attributed half to each region, so region values add up to
whole-network totals.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .assign import FlowField
from .network import ALT, RAIL, DesignAction, MobilityGraph
from .params import ServiceParams, Weights


@dataclass(frozen=True)
class RegionMetrics:
    emissions: float  # kg CO2/day
    travel_cost: float  # CHF/day
    profit: float  # CHF/day
    objective: float = 0.0


def _share(graph: MobilityGraph, layer: str, region: int | None) -> dict[int, float]:
    ids = graph.rail_ids if layer == RAIL else graph.alt_ids
    if region is None:
        return dict.fromkeys(ids, 1.0)
    return dict(zip(ids, graph.region_share(layer, region)))


def emissions(flows: FlowField, graph: MobilityGraph, region: int | None,
              params: ServiceParams | None = None) -> float:
    params = params or ServiceParams()
    rs, as_ = _share(graph, RAIL, region), _share(graph, ALT, region)
    total = sum(rs[e] * params.rail_emission * graph.rail_edges[e].length * y
                for e, y in flows.rail.items())
    total += sum(as_[e] * params.alt_emission * graph.alt_edges[e].length * y
                 for e, y in flows.alt.items())
    return total


def travel_cost(flows: FlowField, graph: MobilityGraph, region: int | None,
                params: ServiceParams | None = None) -> float:
    params = params or ServiceParams()
    rs, as_ = _share(graph, RAIL, region), _share(graph, ALT, region)
    total = sum(rs[e] * graph.rail_edges[e].length * y * params.rail_unit_cost
                for e, y in flows.rail.items())
    total += sum(as_[e] * graph.alt_edges[e].length * y * params.alt_unit_cost
                 for e, y in flows.alt.items())
    return total


def construction_cost(action: DesignAction, graph: MobilityGraph, region: int | None = None,
                      params: ServiceParams | None = None) -> float:
    params = params or ServiceParams()
    rs = _share(graph, RAIL, region)
    total = 0.0
    for e in action.edges():
        length = graph.rail_edges[e].length
        total += rs[e] * (params.base_cost * length * (e in action.builds)
                          + params.capacity_cost * length * action.upgrades.get(e, 0))
    return total


def profit(flows: FlowField, graph: MobilityGraph, region: int | None,
           action: DesignAction | None = None, params: ServiceParams | None = None) -> float:
    """Fare revenue on the region's rail edges minus this year's construction spend there."""
    params = params or ServiceParams()
    rs = _share(graph, RAIL, region)
    revenue = sum(rs[e] * params.rail_fare * graph.rail_edges[e].length * y
                  for e, y in flows.rail.items())
    if action is None:
        return revenue
    return revenue - construction_cost(action, graph, region, params)


def stage_objective(m: RegionMetrics, weights: Weights) -> float:
    return -weights.emission * m.emissions - weights.travel_cost * m.travel_cost + weights.profit * m.profit


def region_metrics(flows: FlowField, graph: MobilityGraph, region: int | None,
                   action: DesignAction | None = None, params: ServiceParams | None = None,
                   weights: Weights | None = None) -> RegionMetrics:
    weights = weights or Weights()
    m = RegionMetrics(emissions(flows, graph, region, params),
                      travel_cost(flows, graph, region, params),
                      profit(flows, graph, region, action, params))
    return RegionMetrics(m.emissions, m.travel_cost, m.profit, stage_objective(m, weights))


class ObjectiveModel:
    """Linear coefficients turning batched flows and actions into region objectives."""

    def __init__(self, graph: MobilityGraph, params: ServiceParams | None = None,
                 weights: Weights | None = None):
        self.graph = graph
        self.params = p = params or ServiceParams()
        self.weights = w = weights or Weights()
        rl, al = graph.rail_lengths(), graph.alt_lengths()
        self.rail_coef, self.alt_coef, self.build_coef, self.freq_coef = {}, {}, {}, {}
        self.parts = {}
        for i in graph.regions:
            rs, as_ = graph.region_share(RAIL, i), graph.region_share(ALT, i)
            e_r, e_a = p.rail_emission * rl * rs, p.alt_emission * al * as_
            c_r, c_a = p.rail_unit_cost * rl * rs, p.alt_unit_cost * al * as_
            rev = p.rail_fare * rl * rs
            self.parts[i] = (e_r, e_a, c_r, c_a, rev)
            self.rail_coef[i] = -w.emission * e_r - w.travel_cost * c_r + w.profit * rev
            self.alt_coef[i] = -w.emission * e_a - w.travel_cost * c_a
            self.build_coef[i] = p.base_cost * rl * rs
            self.freq_coef[i] = p.capacity_cost * rl * rs

    def cost(self, region: int, x: np.ndarray, s: np.ndarray) -> np.ndarray:
        return self.build_coef[region] @ x + self.freq_coef[region] @ s

    def payoff(self, region: int, rail: np.ndarray, alt: np.ndarray,
               x: np.ndarray, s: np.ndarray) -> np.ndarray:
        """Stage objective of ``region``; ``x``/``s`` are this year's actions over all rail edges."""
        return (self.rail_coef[region] @ rail + self.alt_coef[region] @ alt
                - self.weights.profit * self.cost(region, x, s))

    def metrics(self, region: int, rail: np.ndarray, alt: np.ndarray,
                x: np.ndarray, s: np.ndarray) -> RegionMetrics:
        """Unbatched metrics (1-d arrays) for one region."""
        e_r, e_a, c_r, c_a, rev = self.parts[region]
        em = float(e_r @ rail + e_a @ alt)
        tc = float(c_r @ rail + c_a @ alt)
        pr = float(rev @ rail - self.cost(region, x, s))
        m = RegionMetrics(em, tc, pr)
        return RegionMetrics(em, tc, pr, stage_objective(m, self.weights))
