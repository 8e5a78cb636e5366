"""Service, cost and objective parameters with their default values."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np


@dataclass(frozen=True)
class ServiceParams:
    vot: float = 30.0  # CHF/h
    rail_speed: float = 150.0  # km/h
    alt_speed: float = 100.0  # km/h
    rail_fare: float = 0.25  # CHF/km/pax
    alt_fare: float = 1.65  # CHF/km/pax
    rail_emission: float = 0.019  # kg/km/pax
    alt_emission: float = 0.148  # kg/km/pax
    kappa: int = 500  # seats per frequency unit
    s_max: int = 15
    base_cost: float = 574.0  # CHF/day/km
    capacity_cost: float = 31.4  # CHF/day/km per frequency unit
    bpr_alpha: float = 0.15  # coefficient
    bpr_beta: float = 4.0  # exponent
    big_m: float = 1e5

    @property
    def rail_unit_cost(self) -> float:
        """Generalized cost of one rail passenger-km (time plus fare)."""
        return self.vot / self.rail_speed + self.rail_fare

    @property
    def alt_unit_cost(self) -> float:
        return self.vot / self.alt_speed + self.alt_fare

    def with_(self, **changes) -> "ServiceParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class Weights:
    emission: float = 0.1  # CHF per kg
    travel_cost: float = 1.0
    profit: float = 1.0

    def __post_init__(self):
        if min(self.emission, self.travel_cost, self.profit) <= 0:
            raise ValueError("objective weights must be strictly positive")

    def as_array(self) -> np.ndarray:
        return np.array([self.emission, self.travel_cost, self.profit])

    def scaled(self, factor: float) -> "Weights":
        return Weights(self.emission * factor, self.travel_cost * factor, self.profit * factor)


BETA_GRID = (0.0, 0.1, 0.3, 0.5, 0.7, 0.9)
