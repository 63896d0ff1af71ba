"""Burn-in estimation of an unknown link probability.

Each agent watches one fixed base-graph neighbour and counts the rounds in
which that link is active. It stops once the empirical rate clears three
Hoeffding half-widths above zero and reports the rate minus one half-width,
a conservative estimate lying in ``(p/2, p]`` with high probability.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .errors import AlreadyStopped, NotStopped
from .graph import BaseGraph


@dataclass(frozen=True)
class BurnInState:
    delta: float
    watched_neighbor: int
    contact_count: int = 0
    elapsed: int = 0
    stopped: bool = False

    def __post_init__(self) -> None:
        if not (0.0 < self.delta < 1.0):
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")

    @property
    def p_hat(self) -> float:
        return self.contact_count / self.elapsed if self.elapsed else 0.0

    @property
    def ci(self) -> float:
        if self.elapsed == 0:
            return math.inf
        return math.sqrt(math.log(2.0 / self.delta) / (2.0 * self.elapsed))


def watched_neighbor(g: BaseGraph, agent: int) -> int:
    """Lowest-indexed base-graph neighbour of ``agent``."""
    return g.neighbors(agent)[0]


def burn_in_step(s: BurnInState, neighbor_active: bool) -> tuple[BurnInState, bool]:
    """Advance one round; returns the new state and whether the agent stops now."""
    if s.stopped:
        raise AlreadyStopped("burn-in already finished for this agent")
    s = replace(s, elapsed=s.elapsed + 1, contact_count=s.contact_count + bool(neighbor_active))
    stop = s.p_hat - 3.0 * s.ci > 0.0
    if stop:
        s = replace(s, stopped=True)
    return s, stop


def finish_burn_in(s: BurnInState) -> float:
    if not s.stopped:
        raise NotStopped("burn-in has not met its stopping rule yet")
    return s.p_hat - s.ci


def default_delta(horizon: int) -> float:
    """``2 / T^2``, capped just below 1 for tiny horizons."""
    return min(2.0 / horizon**2, 0.5)


def stopping_time_upper_bound(p: float, horizon: int) -> int:
    """``ceil(16 ln T / p^2)``: past this many rounds the stopping rule holds w.h.p."""
    return math.ceil(16.0 * math.log(horizon) / p**2)
