"""Nash-bargaining split of the co-investment surplus between two authorities."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .errors import NoAgreement

TOL = 1e-9  # CHF/day


@dataclass(frozen=True)
class PayoffTriple:
    no_mech: tuple[float, float]  # disagreement payoffs
    stage1: tuple[float, float]
    pool: float

    def __post_init__(self):
        if self.pool < 0:
            raise ValueError("the co-investment pool cannot be negative")
        object.__setattr__(self, "no_mech", tuple(float(v) for v in self.no_mech))
        object.__setattr__(self, "stage1", tuple(float(v) for v in self.stage1))

    @property
    def surplus(self) -> float:
        """Total gain over disagreement: sum(stage1) + pool - sum(no_mech)."""
        return sum(self.stage1) + self.pool - sum(self.no_mech)


@dataclass(frozen=True)
class Allocation:
    shares: tuple[float, float]
    payoffs: tuple[float, float]


def bargaining_feasible(triple: PayoffTriple) -> bool:
    return triple.surplus > TOL


def nash_product(triple: PayoffTriple, shares: Sequence[float]) -> float:
    out = 1.0
    for f, f1, q in zip(triple.no_mech, triple.stage1, shares):
        out *= f1 + q - f
    return out


def nbs_allocate(triple: PayoffTriple) -> Allocation:
    """Maximize the product of gains over disagreement subject to sum(q) = pool.

    With two parties and a linear frontier the maximizer splits the total gain
    equally: v_i = F_i + S/2. Share 1 is computed directly and share 2 as the
    remainder so the pool is exhausted exactly.
    """
    if not bargaining_feasible(triple):
        raise NoAgreement(f"total gain {triple.surplus:.6g} is not positive; "
                          "parties keep their non-cooperative payoffs")
    half = triple.surplus / 2.0
    q1 = triple.no_mech[0] - triple.stage1[0] + half
    q2 = triple.pool - q1
    shares = (q1, q2)
    payoffs = (triple.stage1[0] + q1, triple.stage1[1] + q2)
    return Allocation(shares, payoffs)


def feasible_agreement(coop: Sequence[float], ne: Sequence[float]) -> bool:
    if len(coop) != len(ne):
        raise ValueError("payoff vectors must cover the same authorities")
    return all(c >= n for c, n in zip(coop, ne))
