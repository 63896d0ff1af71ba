"""Gossip successive elimination for heterogeneous multi-agent bandits on random graphs."""

from .agent import AgentState, GseParams, GsePopulation, confidence_radius
from .burn_in import BurnInState, burn_in_step, finish_burn_in
from .environment import BanditInstance, RewardKind, load_instance, make_synthetic_instance, sample_reward
from .experiments import ExperimentKind, ExperimentSpec, fit_loglog_slope, run_experiment
from .graph import (
    BaseGraph,
    CommSnapshot,
    Topology,
    algebraic_connectivity,
    build_topology,
    estimate_contraction,
    sample_comm_graph,
)
from .simulator import (
    Algorithm,
    BurnInResult,
    RegretTrace,
    SimConfig,
    run_baseline_ucb,
    run_burn_in,
    run_replicated,
    run_replication,
)

__version__ = "0.1.0"

__all__ = [
    "AgentState",
    "Algorithm",
    "BanditInstance",
    "BaseGraph",
    "BurnInResult",
    "BurnInState",
    "CommSnapshot",
    "ExperimentKind",
    "ExperimentSpec",
    "GseParams",
    "GsePopulation",
    "RegretTrace",
    "RewardKind",
    "SimConfig",
    "Topology",
    "algebraic_connectivity",
    "build_topology",
    "burn_in_step",
    "confidence_radius",
    "estimate_contraction",
    "finish_burn_in",
    "fit_loglog_slope",
    "load_instance",
    "make_synthetic_instance",
    "run_baseline_ucb",
    "run_burn_in",
    "run_experiment",
    "run_replicated",
    "run_replication",
    "sample_comm_graph",
    "sample_reward",
]
