"""Gossip Successive Elimination (GSE) agent logic.

Two equivalent surfaces are provided:

* per-agent functions on :class:`AgentState` (``select_arm``, ``update_local``,
  ``gossip_update``, ``eliminate``, ``intersect_active_sets``), mirroring the
  protocol one agent at a time;
* :class:`GsePopulation`, which stores every agent's state as ``(N, K)``
  arrays and runs each synchronous phase for all agents at once. The
  simulator uses this one.

Within a round the phases are: pull and update local means, gossip the
global estimates, eliminate, intersect active sets with active neighbours.
Gossip and intersection read only the previous values of every agent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, EmptyActiveSet, RewardOutOfRange
from .graph import CommSnapshot


def mixing_horizon(horizon: int, num_agents: int, p: float, lambda_conn: float) -> int:
    """``ceil(2 N ln T / (p * lambda))``, floored at 1."""
    return max(1, math.ceil(2.0 * num_agents * math.log(horizon) / (p * lambda_conn)))


def consistency_horizon(horizon: int, num_agents: int, p: float, refined: bool = False) -> int:
    """``N * ceil(-2 ln(N T) / ln(1 - p))``; the leading ``N`` is dropped when ``refined``.

    Defined as 0 for ``p == 1`` (every edge fires every round).
    """
    if p >= 1.0:
        return 0
    per_edge = math.ceil(-2.0 * math.log(num_agents * horizon) / math.log1p(-p))
    return per_edge if refined else num_agents * per_edge


def pull_gap_bound(horizon: int, num_agents: int, num_arms: int, p: float) -> int:
    """Worst-case cross-agent gap in pull counts of one arm that holds w.h.p.

    ``K * N * ceil(ln(N^2 T^2) / -ln(1 - p))``. For ``p == 1`` a message crosses
    an edge every round, so the per-edge wait is taken as one round.
    """
    if p >= 1.0:
        wait = 1
    else:
        wait = max(1, math.ceil(math.log(num_agents**2 * horizon**2) / -math.log1p(-p)))
    return num_arms * num_agents * wait


@dataclass(frozen=True)
class GseParams:
    horizon: int
    num_agents: int
    num_arms: int
    link_probability: float
    lambda_conn: float
    refined_lstar: bool = False
    tau_star: int = field(init=False)
    l_star: int = field(init=False)

    def __post_init__(self) -> None:
        if self.horizon < 1:
            raise ValueError(f"horizon must be >= 1, got {self.horizon}")
        if not (0.0 < self.link_probability <= 1.0):
            raise ValueError(f"link probability must lie in (0, 1], got {self.link_probability}")
        if self.lambda_conn <= 0:
            raise ValueError("algebraic connectivity must be positive")
        object.__setattr__(
            self,
            "tau_star",
            mixing_horizon(self.horizon, self.num_agents, self.link_probability, self.lambda_conn),
        )
        object.__setattr__(
            self,
            "l_star",
            consistency_horizon(self.horizon, self.num_agents, self.link_probability, self.refined_lstar),
        )


def confidence_radius(params: GseParams, pulls):
    """Confidence radius for an arm pulled ``pulls`` times (scalar or array).

    Sampling term ``sqrt(4 ln T / (N D))`` plus consensus term
    ``4 (sqrt(N) + tau*) / D`` with ``D = max(pulls - K L*, 1)``.
    """
    r = _radius(np.asarray(pulls, dtype=float), params.horizon, params.num_agents,
                params.num_arms, params.tau_star, params.l_star)
    return float(r) if r.ndim == 0 else r


def _radius(pulls, horizon, n, k, tau, lstar):
    d = np.maximum(pulls - k * lstar, 1.0)
    return np.sqrt(4.0 * math.log(horizon) / (n * d)) + 4.0 * (math.sqrt(n) + tau) / d


# ---------------------------------------------------------------------------
# per-agent surface


@dataclass
class AgentState:
    agent_id: int
    active: np.ndarray  # bool (K,)
    pull_counts: np.ndarray  # int (K,)
    reward_sums: np.ndarray
    mean_curr: np.ndarray
    mean_prev: np.ndarray
    z: np.ndarray

    @classmethod
    def initial(cls, agent_id: int, num_arms: int) -> "AgentState":
        return cls(
            agent_id,
            np.ones(num_arms, dtype=bool),
            np.zeros(num_arms, dtype=np.int64),
            np.zeros(num_arms),
            np.zeros(num_arms),
            np.zeros(num_arms),
            np.zeros(num_arms),
        )

    @property
    def active_set(self) -> tuple[int, ...]:
        return tuple(int(k) for k in np.flatnonzero(self.active))


def select_arm(s: AgentState) -> int:
    """Least-pulled active arm, lowest index on ties."""
    if not s.active.any():
        raise EmptyActiveSet(f"agent {s.agent_id} has no active arm")
    counts = np.where(s.active, s.pull_counts, np.iinfo(np.int64).max)
    return int(np.argmin(counts))


def update_local(s: AgentState, arm: int, reward: float) -> None:
    if not (0.0 <= reward <= 1.0):
        raise RewardOutOfRange(f"reward {reward} outside [0, 1]")
    if not s.active[arm]:
        raise ValueError(f"arm {arm} is not active for agent {s.agent_id}")
    s.mean_prev = s.mean_curr.copy()
    s.reward_sums[arm] += reward
    s.pull_counts[arm] += 1
    s.mean_curr[arm] = s.reward_sums[arm] / s.pull_counts[arm]


def gossip_update(states: Sequence[AgentState], snapshot: CommSnapshot) -> None:
    """Mix every agent's global estimates with ``W_t`` and add its local-mean increment."""
    w = snapshot.gossip_weights
    if w.shape != (len(states), len(states)):
        raise DimensionMismatch(f"gossip matrix {w.shape} does not match {len(states)} agents")
    z_old = np.stack([s.z for s in states])
    for i, s in enumerate(states):
        s.z = w[i] @ z_old + (s.mean_curr - s.mean_prev)


def eliminate(s: AgentState, params: GseParams) -> bool:
    """Drop every active arm whose upper bound is dominated by another arm's lower bound.

    Returns True if the empty-set guard fired.
    """
    c = _radius(s.pull_counts.astype(float), params.horizon, params.num_agents, params.num_arms,
                params.tau_star, params.l_star)
    new, fired = _eliminate_row(s.active, s.z - c, s.z + c)
    s.active = new
    return fired


def _eliminate_row(active, lcb, ucb):
    idx = np.flatnonzero(active)
    keep = active.copy()
    for k in idx:
        others = idx[idx != k]
        if others.size and np.any(lcb[others] >= ucb[k]):
            keep[k] = False
    if not keep.any():
        best = idx[np.argmax(lcb[idx])]
        keep[best] = True
        return keep, True
    return keep, False


def intersect_active_sets(states: Sequence[AgentState], snapshot: CommSnapshot) -> int:
    """Replace each active set by its intersection with its active neighbours' sets.

    Returns how many agents hit the empty-intersection guard (kept their own set).
    """
    old = [s.active.copy() for s in states]
    fired = 0
    for i, s in enumerate(states):
        new = old[i].copy()
        for j in snapshot.active_neighbors(i):
            new &= old[j]
        if new.any():
            s.active = new
        else:
            fired += 1
    return fired


# ---------------------------------------------------------------------------
# vectorised population


class GsePopulation:
    """All N agents' GSE state as stacked arrays.

    Per-agent ``tau_star``/``l_star`` are supported so agents may run with
    their own link-probability estimates.
    """

    def __init__(self, num_agents: int, num_arms: int, horizon: int,
                 tau_star: np.ndarray | int, l_star: np.ndarray | int):
        self.n = num_agents
        self.k = num_arms
        self.horizon = horizon
        self.tau_star = np.broadcast_to(np.asarray(tau_star, dtype=float), (num_agents,))[:, None]
        self.l_star = np.broadcast_to(np.asarray(l_star, dtype=float), (num_agents,))[:, None]
        self.active = np.ones((num_agents, num_arms), dtype=bool)
        self.pull_counts = np.zeros((num_agents, num_arms), dtype=np.int64)
        self.reward_sums = np.zeros((num_agents, num_arms))
        self.mean_curr = np.zeros((num_agents, num_arms))
        self.mean_prev = np.zeros((num_agents, num_arms))
        self.z = np.zeros((num_agents, num_arms))
        self._rows = np.arange(num_agents)
        self._offdiag = ~np.eye(num_arms, dtype=bool)
        self._eye = np.eye(num_agents, dtype=bool)
        self._log_t = math.log(horizon)

    @classmethod
    def from_params(cls, params: Sequence[GseParams]) -> "GsePopulation":
        p0 = params[0]
        return cls(p0.num_agents, p0.num_arms, p0.horizon,
                   np.array([p.tau_star for p in params]), np.array([p.l_star for p in params]))

    def radius(self) -> np.ndarray:
        d = np.maximum(self.pull_counts - self.k * self.l_star, 1.0)
        return np.sqrt(4.0 * self._log_t / (self.n * d)) + 4.0 * (math.sqrt(self.n) + self.tau_star) / d

    def select(self) -> np.ndarray:
        counts = np.where(self.active, self.pull_counts, np.iinfo(np.int64).max)
        return np.argmin(counts, axis=1)

    def update_local(self, arms: np.ndarray, rewards: np.ndarray) -> None:
        r = self._rows
        self.mean_prev[:] = self.mean_curr
        self.reward_sums[r, arms] += rewards
        self.pull_counts[r, arms] += 1
        self.mean_curr[r, arms] = self.reward_sums[r, arms] / self.pull_counts[r, arms]

    def gossip(self, w: np.ndarray) -> None:
        if w.shape != (self.n, self.n):
            raise DimensionMismatch(f"gossip matrix {w.shape} does not match {self.n} agents")
        self.z = w @ self.z + (self.mean_curr - self.mean_prev)

    def eliminate(self, radius: np.ndarray | None = None) -> int:
        """Vectorised elimination; returns the number of agents whose guard fired.

        ``radius`` may be passed in if already computed for the current counts.
        """
        c = self.radius() if radius is None else radius
        lcb = self.z - c
        ucb = self.z + c
        # dominated[i, k, k'] : arm k' (active, != k) has lcb >= ucb of arm k
        dominated = (lcb[:, None, :] >= ucb[:, :, None]) & self.active[:, None, :] & self._offdiag
        keep = self.active & ~dominated.any(axis=2)
        empty = ~keep.any(axis=1)
        if empty.any():
            for i in np.flatnonzero(empty):
                idx = np.flatnonzero(self.active[i])
                keep[i, idx[np.argmax(lcb[i, idx])]] = True
        self.active = keep
        return int(empty.sum())

    def intersect(self, adjacency: np.ndarray) -> int:
        """Intersect with active neighbours; returns the empty-intersection guard count."""
        closed = adjacency | self._eye
        # an arm survives for i iff every member of i's closed neighbourhood still holds it
        missing = closed.astype(np.int64) @ (~self.active).astype(np.int64)
        new = missing == 0
        empty = ~new.any(axis=1)
        if empty.any():
            new[empty] = self.active[empty]
        self.active = new
        return int(empty.sum())

    def to_states(self) -> list[AgentState]:
        return [
            AgentState(i, self.active[i].copy(), self.pull_counts[i].copy(), self.reward_sums[i].copy(),
                       self.mean_curr[i].copy(), self.mean_prev[i].copy(), self.z[i].copy())
            for i in range(self.n)
        ]
