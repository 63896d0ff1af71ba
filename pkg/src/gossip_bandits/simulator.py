"""Synchronous round engine for GSE and the no-communication UCB baseline.

One replication is fully determined by its :class:`SimConfig`: the master
seed feeds independent named streams for the graph schedule, each agent's
rewards, burn-in arm choices and (unless pinned separately) the synthetic
instance.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional

import numpy as np

from . import rng as rngmod
from .agent import GseParams, GsePopulation, pull_gap_bound
from .burn_in import BurnInState, burn_in_step, default_delta, finish_burn_in, watched_neighbor
from .environment import (
    BanditInstance,
    RewardKind,
    draw_block,
    load_instance,
    make_synthetic_instance,
    rewards_from_draws,
)
from .graph import (
    BaseGraph,
    Topology,
    algebraic_connectivity,
    build_topology,
    check_probability,
    load_edge_list,
    sample_comm_graph,
)

log = logging.getLogger(__name__)


class Algorithm(str, Enum):
    GSE = "gse"
    INDEPENDENT_UCB = "independent_ucb"


@dataclass(frozen=True)
class SimConfig:
    """Everything needed to run one replication.

    ``instance_seed`` pins the synthetic instance independently of
    ``master_seed``; when ``None`` the instance is drawn from the master
    seed's own instance stream. ``refined_complete_lstar=None`` enables the
    refined consistency horizon automatically on complete base graphs.
    """

    horizon: int = 10_000
    topology: Topology = Topology.COMPLETE
    num_agents: int = 16
    degree: Optional[int] = None
    edge_file: Optional[str] = None
    num_arms: int = 5
    link_probability: float = 0.9
    estimate_p: bool = False
    delta: Optional[float] = None
    reward_kind: RewardKind = RewardKind.BERNOULLI
    reward_sigma: float = 0.1
    instance_file: Optional[str] = None
    instance_seed: Optional[int] = None
    algorithm: Algorithm = Algorithm.GSE
    master_seed: int = 0
    refined_complete_lstar: Optional[bool] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "topology", Topology(self.topology))
        object.__setattr__(self, "reward_kind", RewardKind(self.reward_kind))
        object.__setattr__(self, "algorithm", Algorithm(self.algorithm))
        if self.horizon < 1:
            raise ValueError(f"horizon must be >= 1, got {self.horizon}")
        if self.master_seed < 0:
            raise ValueError("master_seed must be non-negative")
        check_probability(self.link_probability)
        if self.instance_file is None and self.num_arms < 1:
            raise ValueError(f"num_arms must be >= 1, got {self.num_arms}")

    def build_graph(self) -> BaseGraph:
        if self.topology is Topology.CUSTOM:
            if self.edge_file is None:
                raise ValueError("custom topology needs edge_file")
            return load_edge_list(self.edge_file)
        return build_topology(self.topology, self.num_agents, degree=self.degree)

    def build_instance(self) -> BanditInstance:
        if self.instance_file is not None:
            return load_instance(self.instance_file, self.reward_kind, self.reward_sigma)
        seed = self.master_seed if self.instance_seed is None else self.instance_seed
        n = self.build_graph().num_agents
        if self.num_arms == 1:
            return BanditInstance(np.zeros((n, 1)), self.reward_kind, self.reward_sigma)
        inst = make_synthetic_instance(n, self.num_arms, rngmod.stream(seed, "instance"))
        return replace(inst, reward_kind=self.reward_kind, sigma=self.reward_sigma)

    def refined(self, g: BaseGraph) -> bool:
        if self.refined_complete_lstar is None:
            return g.topology is Topology.COMPLETE
        return self.refined_complete_lstar

    def with_seed(self, seed: int) -> "SimConfig":
        return replace(self, master_seed=seed)


@dataclass
class RegretTrace:
    """Outcome of one replication.

    ``agent_cum_regret[t, i]`` is agent i's cumulative regret after round
    ``t + 1``; ``cum_regret`` is its row sum. ``pull_counts`` include
    burn-in pulls, so ``cum_regret[-1] == gaps @ pull_counts.sum(0)``.
    """

    agent_cum_regret: np.ndarray
    pull_counts: np.ndarray
    gaps: np.ndarray
    final_active: np.ndarray
    burn_in_rounds: int = 0
    burn_in_lengths: Optional[np.ndarray] = None
    p_hat: Optional[np.ndarray] = None
    elimination_guard: int = 0
    intersection_guard: int = 0
    confidence_violations: int = 0
    confidence_checks: int = 0
    violating_rounds: int = 0
    gse_rounds: int = 0
    pull_gap_violations: int = 0
    max_mean_identity_error: float = 0.0
    monotonicity_violations: int = 0
    cum_regret: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        self.cum_regret = self.agent_cum_regret.sum(axis=1)

    @property
    def horizon(self) -> int:
        return len(self.cum_regret)

    @property
    def final_regret(self) -> float:
        return float(self.cum_regret[-1])

    @property
    def confidence_violation_rate(self) -> float:
        return self.confidence_violations / self.confidence_checks if self.confidence_checks else 0.0

    def regret_in(self, start: int, stop: int) -> float:
        """Global regret accrued in rounds ``start+1 .. stop`` (1-based, inclusive of ``stop``)."""
        hi = self.cum_regret[stop - 1] if stop > 0 else 0.0
        lo = self.cum_regret[start - 1] if start > 0 else 0.0
        return float(hi - lo)


def _burn_in(cfg, g, gaps, graph_rng, agent_regret, counts):
    """Run every agent's burn-in in lockstep; returns (rounds used, stop times, estimates)."""
    n, k = counts.shape
    delta = cfg.delta if cfg.delta is not None else default_delta(cfg.horizon)
    states = [BurnInState(delta, watched_neighbor(g, i)) for i in range(n)]
    stop_at = np.zeros(n, dtype=np.int64)
    arm_rng = rngmod.stream(cfg.master_seed, "burn_in")
    rows = np.arange(n)
    t = 0
    while t < cfg.horizon and not all(s.stopped for s in states):
        snap = sample_comm_graph(g, cfg.link_probability, t + 1, graph_rng)
        for i, s in enumerate(states):
            if not s.stopped:
                states[i], stop = burn_in_step(s, bool(snap.adjacency[i, s.watched_neighbor]))
                if stop:
                    stop_at[i] = t + 1
        arms = arm_rng.integers(k, size=n)
        agent_regret[t] = gaps[arms]
        counts[rows, arms] += 1
        t += 1
    p_hat = np.array([finish_burn_in(s) if s.stopped else math.nan for s in states])
    return t, stop_at, p_hat


@dataclass(frozen=True)
class BurnInResult:
    rounds: int
    lengths: np.ndarray
    p_hat: np.ndarray


def run_burn_in(cfg: SimConfig) -> BurnInResult:
    """Only the burn-in phase of a replication, on the same streams ``run_replication`` uses."""
    g = cfg.build_graph()
    inst = cfg.build_instance()
    agent_regret = np.zeros((cfg.horizon, g.num_agents))
    counts = np.zeros((g.num_agents, inst.num_arms), dtype=np.int64)
    t, stop_at, p_hat = _burn_in(cfg, g, inst.gaps, rngmod.stream(cfg.master_seed, "graph"), agent_regret, counts)
    return BurnInResult(t, stop_at, p_hat)


def run_replication(cfg: SimConfig) -> RegretTrace:
    """Run one seeded replication of ``cfg.algorithm``."""
    if cfg.algorithm is Algorithm.INDEPENDENT_UCB:
        return run_baseline_ucb(cfg)

    g = cfg.build_graph()
    inst = cfg.build_instance()
    if inst.num_agents != g.num_agents:
        raise ValueError(f"instance has {inst.num_agents} agents but graph has {g.num_agents}")
    n, k, horizon = inst.num_agents, inst.num_arms, cfg.horizon
    p = cfg.link_probability
    lam = algebraic_connectivity(g).lambda_second_smallest
    refined = cfg.refined(g)
    gaps = inst.gaps
    mu = inst.global_means
    graph_rng = rngmod.stream(cfg.master_seed, "graph")

    agent_regret = np.zeros((horizon, n))
    counts = np.zeros((n, k), dtype=np.int64)
    rows = np.arange(n)

    t = 0
    stop_at = p_hat = None
    p_used = np.full(n, p)
    if cfg.estimate_p:
        t, stop_at, p_hat = _burn_in(cfg, g, gaps, graph_rng, agent_regret, counts)
        p_used = p_hat
    burn_rounds = t

    trace_kw = {}
    if t < horizon:
        params = [GseParams(horizon, n, k, float(pi), lam, refined) for pi in p_used]
        pop = GsePopulation.from_params(params)
        steps = horizon - t
        draws = np.stack(
            [draw_block(inst, rngmod.stream(cfg.master_seed, "rewards", i), steps) for i in range(n)]
        )
        gap_bound = pull_gap_bound(horizon, n, k, p)
        elim_guard = int_guard = viol = viol_rounds = gap_viol = mono_viol = 0
        max_err = 0.0
        for s in range(steps):
            snap = sample_comm_graph(g, p, t + 1, graph_rng)
            arms = pop.select()
            pop.update_local(arms, rewards_from_draws(inst, arms, draws[:, s]))
            pop.gossip(snap.gossip_weights)

            c = pop.radius()
            bad = np.abs(pop.z - mu) > c
            nbad = int(bad.sum())
            viol += nbad
            viol_rounds += nbad > 0
            max_err = max(max_err, float(np.abs(pop.z.sum(0) - pop.mean_curr.sum(0)).max()) / n)

            before = pop.active
            elim_guard += pop.eliminate(c)
            int_guard += pop.intersect(snap.adjacency)
            mono_viol += int(np.any(pop.active & ~before))

            gse_counts = pop.pull_counts
            gap_viol += int(np.any(gse_counts.max(0) - gse_counts.min(0) > gap_bound))
            agent_regret[t] = gaps[arms]
            counts[rows, arms] += 1
            t += 1
        trace_kw = dict(
            elimination_guard=elim_guard,
            intersection_guard=int_guard,
            confidence_violations=viol,
            confidence_checks=steps * n * k,
            violating_rounds=viol_rounds,
            gse_rounds=steps,
            pull_gap_violations=gap_viol,
            max_mean_identity_error=max_err,
            monotonicity_violations=mono_viol,
        )
        final_active = pop.active.copy()
    else:
        final_active = np.ones((n, k), dtype=bool)

    return RegretTrace(
        agent_cum_regret=np.cumsum(agent_regret, axis=0),
        pull_counts=counts,
        gaps=gaps.copy(),
        final_active=final_active,
        burn_in_rounds=burn_rounds,
        burn_in_lengths=stop_at,
        p_hat=p_hat,
        **trace_kw,
    )


def run_baseline_ucb(cfg: SimConfig) -> RegretTrace:
    """Each agent runs UCB1 on its own rewards, no communication.

    Regret is still charged against the global gaps.
    """
    inst = cfg.build_instance()
    n, k, horizon = inst.num_agents, inst.num_arms, cfg.horizon
    gaps = inst.gaps
    draws = np.stack(
        [draw_block(inst, rngmod.stream(cfg.master_seed, "rewards", i), horizon) for i in range(n)]
    )
    counts = np.zeros((n, k), dtype=np.int64)
    sums = np.zeros((n, k))
    agent_regret = np.zeros((horizon, n))
    rows = np.arange(n)
    for t in range(horizon):
        if t < k:
            arms = np.full(n, t)
        else:
            index = sums / counts + np.sqrt(2.0 * math.log(t + 1) / counts)
            arms = np.argmax(index, axis=1)
        rewards = rewards_from_draws(inst, arms, draws[:, t])
        counts[rows, arms] += 1
        sums[rows, arms] += rewards
        agent_regret[t] = gaps[arms]
    return RegretTrace(
        agent_cum_regret=np.cumsum(agent_regret, axis=0),
        pull_counts=counts,
        gaps=gaps.copy(),
        final_active=np.ones((n, k), dtype=bool),
    )


@dataclass
class ReplicatedSummary:
    mean_curve: np.ndarray
    std_curve: np.ndarray
    seeds: list[int]
    traces: list[RegretTrace]

    @property
    def final_regrets(self) -> np.ndarray:
        return np.array([tr.final_regret for tr in self.traces])

    @property
    def mean_final(self) -> float:
        return float(self.mean_curve[-1])


def run_replicated(cfg: SimConfig, reps: int, n_jobs: int = 1) -> ReplicatedSummary:
    """Run ``reps`` replications with seeds ``master_seed + r``.

    Results do not depend on ``n_jobs``: each replication owns its streams
    and aggregation is pointwise.
    """
    if reps < 1:
        raise ValueError(f"reps must be >= 1, got {reps}")
    seeds = [cfg.master_seed + r for r in range(reps)]
    cfgs = [cfg.with_seed(s) for s in seeds]
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            traces = list(pool.map(run_replication, cfgs))
    else:
        traces = [run_replication(c) for c in cfgs]
    curves = np.stack([tr.cum_regret for tr in traces])
    std = curves.std(axis=0, ddof=1) if reps > 1 else np.zeros(curves.shape[1])
    return ReplicatedSummary(curves.mean(axis=0), std, seeds, traces)
