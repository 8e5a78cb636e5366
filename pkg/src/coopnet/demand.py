"""Travel requests: trip-type classification, seeded generation and annual growth."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import InvalidBounds, UnknownNode
from .network import MobilityGraph

TRIP_TYPES = ("intra1", "intra2", "inter1", "inter2")
DEFAULT_BOUNDS = {t: (20, 200) for t in TRIP_TYPES}


@dataclass(frozen=True)
class TravelRequest:
    origin: int
    destination: int
    trips: int
    trip_type: str

    def __post_init__(self):
        if self.origin == self.destination:
            raise ValueError("origin and destination must differ")
        if self.trips < 0:
            raise ValueError("trip count must be non-negative")


@dataclass(frozen=True)
class DemandModel:
    requests: tuple[TravelRequest, ...]
    growth_rate: float = 0.015
    bounds: Mapping[str, tuple[int, int]] = field(default_factory=lambda: dict(DEFAULT_BOUNDS))

    def total(self) -> int:
        return sum(r.trips for r in self.requests)

    def total_by_type(self) -> dict[str, int]:
        out = dict.fromkeys(TRIP_TYPES, 0)
        for r in self.requests:
            out[r.trip_type] += r.trips
        return out


def classify(origin: int, destination: int, graph: MobilityGraph) -> str:
    try:
        ro, rd = graph.region[origin], graph.region[destination]
    except KeyError as exc:
        raise UnknownNode(exc.args[0]) from None
    return f"intra{ro}" if ro == rd else f"inter{ro}"


def check_bounds(bounds: Mapping[str, tuple[int, int]]) -> None:
    for t in TRIP_TYPES:
        if t not in bounds:
            raise InvalidBounds(f"missing bounds for trip type {t}")
        lo, hi = bounds[t]
        if lo < 0 or lo > hi:
            raise InvalidBounds(f"bounds for {t} must satisfy 0 <= lower <= upper, got {(lo, hi)}")


def generate(graph: MobilityGraph, bounds: Mapping[str, tuple[int, int]] | None = None,
             seed: int = 0, growth_rate: float = 0.015) -> DemandModel:
    """One request per ordered pair of distinct nodes, trips ~ U{lower, upper} by trip type."""
    bounds = dict(bounds or DEFAULT_BOUNDS)
    check_bounds(bounds)
    rng = np.random.default_rng(seed)
    reqs = []
    for o in graph.node_ids:
        for d in graph.node_ids:
            if o == d:
                continue
            t = classify(o, d, graph)
            lo, hi = bounds[t]
            reqs.append(TravelRequest(o, d, int(rng.integers(lo, hi, endpoint=True)), t))
    return DemandModel(tuple(reqs), growth_rate, bounds)


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def demand_at_year(model: DemandModel, t: int) -> list[TravelRequest]:
    if t < 1:
        raise ValueError("years are counted from 1")
    factor = (1.0 + model.growth_rate) ** (t - 1)
    return [replace(r, trips=round_half_up(r.trips * factor)) for r in model.requests]


def scale_intra(model: DemandModel, ratio: Sequence[float]) -> DemandModel:
    """Rescale intra-regional volumes so their totals follow ``ratio`` (region 1 : region 2).

    The combined intra-regional volume, and hence the overall total, is held
    constant up to rounding of each request.
    """
    r1, r2 = ratio
    if r1 <= 0 or r2 <= 0:
        raise ValueError("ratios must be positive")
    totals = model.total_by_type()
    pooled = totals["intra1"] + totals["intra2"]
    target = {"intra1": pooled * r1 / (r1 + r2), "intra2": pooled * r2 / (r1 + r2)}
    factor = {t: target[t] / totals[t] if totals[t] else 1.0 for t in target}
    reqs = tuple(replace(r, trips=round_half_up(r.trips * factor[r.trip_type]))
                 if r.trip_type in factor else r for r in model.requests)
    bounds = dict(model.bounds)
    for t, f in factor.items():
        lo, hi = bounds[t]
        bounds[t] = (round_half_up(lo * f), round_half_up(hi * f))
    return DemandModel(reqs, model.growth_rate, bounds)


def read_demand_csv(path, graph: MobilityGraph, growth_rate: float = 0.015) -> DemandModel:
    """Rows ``origin,destination,trips``; a header row is optional."""
    reqs = []
    with open(Path(path), newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().startswith("#"):
                continue
            if not row[0].strip().lstrip("-").isdigit():
                continue
            o, d, n = int(row[0]), int(row[1]), int(float(row[2]))
            reqs.append(TravelRequest(o, d, n, classify(o, d, graph)))
    return DemandModel(tuple(reqs), growth_rate)
