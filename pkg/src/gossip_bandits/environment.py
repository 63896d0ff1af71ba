"""Heterogeneous bandit instances and local reward sampling.

Arms and agents are 0-indexed throughout the library.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, IndexOutOfRange, ParseError, ValueOutOfRange


class RewardKind(str, Enum):
    BERNOULLI = "bernoulli"
    TRUNCATED_GAUSSIAN = "truncated_gaussian"


@dataclass(frozen=True)
class BanditInstance:
    """Per-agent mean-reward table plus the global quantities derived from it.

    ``TRUNCATED_GAUSSIAN`` rewards are ``clip(Normal(mu, sigma^2), 0, 1)``;
    clipping shifts the realised mean towards 1/2, so ``local_means`` are
    then only the pre-clip location parameters.
    """

    local_means: np.ndarray
    reward_kind: RewardKind = RewardKind.BERNOULLI
    sigma: float = 0.1
    global_means: np.ndarray = field(init=False, repr=False)
    gaps: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        mu = np.array(self.local_means, dtype=float)
        if mu.ndim != 2 or mu.shape[0] < 1 or mu.shape[1] < 1:
            raise DimensionMismatch(f"local means must be a non-empty N x K table, got shape {mu.shape}")
        if not np.all((mu >= 0.0) & (mu <= 1.0)):
            raise ValueOutOfRange("every local mean must lie in [0, 1]")
        if self.sigma < 0:
            raise ValueOutOfRange(f"sigma must be non-negative, got {self.sigma}")
        mu.setflags(write=False)
        object.__setattr__(self, "local_means", mu)
        object.__setattr__(self, "reward_kind", RewardKind(self.reward_kind))
        g = mu.mean(axis=0)
        gaps = g.max() - g
        g.setflags(write=False)
        gaps.setflags(write=False)
        object.__setattr__(self, "global_means", g)
        object.__setattr__(self, "gaps", gaps)

    @property
    def num_agents(self) -> int:
        return self.local_means.shape[0]

    @property
    def num_arms(self) -> int:
        return self.local_means.shape[1]

    @property
    def optimal_value(self) -> float:
        return float(self.global_means.max())

    @property
    def optimal_arm(self) -> int:
        # np.argmax returns the first maximiser, i.e. the lowest index on ties
        return int(np.argmax(self.global_means))


def make_synthetic_instance(n: int, k: int, rng: np.random.Generator) -> BanditInstance:
    """Draw ``q_i ~ U[0, 1]`` per agent and set ``mu[i, a] = q_i * a / (k - 1)``.

    Arm ``k - 1`` is globally optimal, arm 0 has zero mean everywhere.
    """
    if n < 1:
        raise ValueError(f"need at least one agent, got {n}")
    if k < 2:
        raise ValueError(f"need at least two arms, got {k}")
    q = rng.random(n)
    scale = np.arange(k) / (k - 1)
    return BanditInstance(np.outer(q, scale))


def load_instance(
    path: str | Path, reward_kind: RewardKind | str = RewardKind.BERNOULLI, sigma: float = 0.1
) -> BanditInstance:
    """Read an instance file: ``N K`` on line one, then N rows of K decimals in [0, 1]."""
    rows = [ln.split() for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not rows:
        raise ParseError(f"{path}: empty instance file")
    try:
        n, k = (int(v) for v in rows[0])
    except ValueError as exc:
        raise ParseError(f"{path}: header must be 'N K', got {' '.join(rows[0])!r}") from exc
    body = rows[1:]
    if len(body) != n or any(len(r) != k for r in body):
        raise DimensionMismatch(f"{path}: expected {n} rows of {k} values")
    try:
        table = np.array([[float(v) for v in r] for r in body])
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    if not np.all((table >= 0.0) & (table <= 1.0)):
        raise ValueOutOfRange(f"{path}: means must lie in [0, 1]")
    return BanditInstance(table, RewardKind(reward_kind), sigma)


def write_instance(inst: BanditInstance, path: str | Path) -> None:
    lines = [f"{inst.num_agents} {inst.num_arms}"]
    lines += [" ".join(f"{v:.17g}" for v in row) for row in inst.local_means]
    Path(path).write_text("\n".join(lines) + "\n")


def sample_reward(inst: BanditInstance, agent: int, arm: int, rng: np.random.Generator) -> float:
    """One local reward for ``agent`` pulling ``arm``.

    Bernoulli draws consume one uniform (``u < mu``); truncated Gaussian draws
    consume one standard normal. The simulator replays exactly these draws in
    batches, so a per-agent stream gives identical rewards either way.
    """
    if not (0 <= agent < inst.num_agents):
        raise IndexOutOfRange(f"agent {agent} out of range [0, {inst.num_agents})")
    if not (0 <= arm < inst.num_arms):
        raise IndexOutOfRange(f"arm {arm} out of range [0, {inst.num_arms})")
    mu = inst.local_means[agent, arm]
    if inst.reward_kind is RewardKind.BERNOULLI:
        return float(rng.random() < mu)
    return float(np.clip(mu + inst.sigma * rng.standard_normal(), 0.0, 1.0))


def rewards_from_draws(inst: BanditInstance, arms: np.ndarray, draws: np.ndarray) -> np.ndarray:
    """Vectorised twin of :func:`sample_reward` for one pull per agent."""
    mu = inst.local_means[np.arange(inst.num_agents), arms]
    if inst.reward_kind is RewardKind.BERNOULLI:
        return (draws < mu).astype(float)
    return np.clip(mu + inst.sigma * draws, 0.0, 1.0)


def draw_block(inst: BanditInstance, rng: np.random.Generator, size: int) -> np.ndarray:
    """Raw variates for ``size`` consecutive pulls from one agent's reward stream."""
    if inst.reward_kind is RewardKind.BERNOULLI:
        return rng.random(size)
    return rng.standard_normal(size)
