"""Base topologies, Laplacian spectra and per-round Erdős–Rényi gossip snapshots."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .errors import (
    DisconnectedGraph,
    InvalidProbability,
    InvalidTopologyParams,
    ParseError,
)


class Topology(str, Enum):
    COMPLETE = "complete"
    GRID2D = "grid2d"
    RING = "ring"
    CIRCULANT = "circulant"
    PETERSEN = "petersen"
    CUSTOM = "custom"


class SpectralMethod(str, Enum):
    CLOSED_FORM = "closed_form"
    NUMERIC = "numeric"


def _normalize_edges(n: int, edges: Iterable[tuple[int, int]]) -> tuple[tuple[int, int], ...]:
    out = set()
    for i, j in edges:
        i, j = int(i), int(j)
        if not (0 <= i < n and 0 <= j < n):
            raise InvalidTopologyParams(f"edge ({i}, {j}) out of range for {n} agents")
        if i == j:
            raise InvalidTopologyParams(f"self-loop at node {i}")
        out.add((min(i, j), max(i, j)))
    return tuple(sorted(out))


def _is_connected(n: int, edges: Iterable[tuple[int, int]]) -> bool:
    adj: list[list[int]] = [[] for _ in range(n)]
    for i, j in edges:
        adj[i].append(j)
        adj[j].append(i)
    seen = [False] * n
    seen[0] = True
    queue = deque([0])
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if not seen[v]:
                seen[v] = True
                queue.append(v)
    return all(seen)


@dataclass(frozen=True)
class BaseGraph:
    """Fixed, connected, undirected simple graph of feasible links.

    Edges are stored as sorted ``(i, j)`` pairs with ``i < j``; this order is
    also the order in which per-round activations are drawn.
    """

    num_agents: int
    edges: tuple[tuple[int, int], ...]
    topology: Topology = Topology.CUSTOM
    degree: Optional[int] = None  # circulant only
    _edge_index: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.num_agents < 2:
            raise InvalidTopologyParams(f"need at least 2 agents, got {self.num_agents}")
        edges = _normalize_edges(self.num_agents, self.edges)
        if not _is_connected(self.num_agents, edges):
            raise DisconnectedGraph(f"base graph on {self.num_agents} nodes is not connected")
        object.__setattr__(self, "edges", edges)
        idx = np.array(edges, dtype=np.intp).reshape(-1, 2)
        idx.setflags(write=False)
        object.__setattr__(self, "_edge_index", idx)

    @property
    def edge_index(self) -> np.ndarray:
        """``(|E|, 2)`` read-only integer array of the sorted edge list."""
        return self._edge_index

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def neighbors(self, i: int) -> list[int]:
        return sorted({b for a, b in self.edges if a == i} | {a for a, b in self.edges if b == i})

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.num_agents, self.num_agents))
        e = self._edge_index
        a[e[:, 0], e[:, 1]] = 1.0
        a[e[:, 1], e[:, 0]] = 1.0
        return a

    def laplacian(self) -> np.ndarray:
        a = self.adjacency()
        return np.diag(a.sum(axis=1)) - a


def build_topology(
    tag: Topology | str,
    n: int,
    *,
    degree: Optional[int] = None,
    edges: Optional[Iterable[tuple[int, int]]] = None,
) -> BaseGraph:
    """Construct the canonical base graph for ``tag`` on ``n`` agents.

    ``degree`` is required for :attr:`Topology.CIRCULANT` (even, ``2 <= d < n``);
    each node then links to its ``d/2`` nearest successors and predecessors.
    ``edges`` is required for :attr:`Topology.CUSTOM`.
    """
    tag = Topology(tag)
    if n < 2:
        raise InvalidTopologyParams(f"need at least 2 agents, got {n}")

    if tag is Topology.COMPLETE:
        e = [(i, j) for i in range(n) for j in range(i + 1, n)]
    elif tag is Topology.RING:
        if n < 3:
            raise InvalidTopologyParams("ring needs at least 3 agents")
        e = [(i, (i + 1) % n) for i in range(n)]
    elif tag is Topology.GRID2D:
        side = math.isqrt(n)
        if side * side != n:
            raise InvalidTopologyParams(f"grid2d needs a perfect square, got {n}")
        e = []
        for r in range(side):
            for c in range(side):
                v = r * side + c
                if c + 1 < side:
                    e.append((v, v + 1))
                if r + 1 < side:
                    e.append((v, v + side))
    elif tag is Topology.CIRCULANT:
        if degree is None or degree % 2 or not (2 <= degree < n):
            raise InvalidTopologyParams(f"circulant needs even degree in [2, {n}), got {degree}")
        e = [(i, (i + s) % n) for i in range(n) for s in range(1, degree // 2 + 1)]
    elif tag is Topology.PETERSEN:
        if n != 10:
            raise InvalidTopologyParams(f"petersen graph has exactly 10 nodes, got {n}")
        e = [(i, (i + 1) % 5) for i in range(5)]
        e += [(5 + i, 5 + (i + 2) % 5) for i in range(5)]
        e += [(i, i + 5) for i in range(5)]
    else:
        if edges is None:
            raise InvalidTopologyParams("custom topology needs an explicit edge list")
        e = list(edges)

    return BaseGraph(n, tuple(e), tag, degree if tag is Topology.CIRCULANT else None)


def load_edge_list(path: str | Path) -> BaseGraph:
    """Read a custom topology: first line ``N``, then one ``i j`` pair per line (0-indexed)."""
    lines = [ln.split("#", 1)[0].strip() for ln in Path(path).read_text().splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise ParseError(f"{path}: empty edge list file")
    try:
        n = int(lines[0])
        pairs = []
        for ln in lines[1:]:
            a, b = ln.split()
            pairs.append((int(a), int(b)))
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    return build_topology(Topology.CUSTOM, n, edges=pairs)


@dataclass(frozen=True)
class SpectralSummary:
    lambda_second_smallest: float
    method: SpectralMethod


def _closed_form_lambda(g: BaseGraph) -> Optional[float]:
    n = g.num_agents
    if g.topology is Topology.COMPLETE:
        return float(n)
    if g.topology is Topology.GRID2D:
        return 2.0 * (1.0 - math.cos(math.pi / math.isqrt(n)))
    if g.topology is Topology.RING:
        return 2.0 * (1.0 - math.cos(2.0 * math.pi / n))
    if g.topology is Topology.CIRCULANT:
        # circulant spectrum: sum over offsets s of 2(1 - cos(2 pi j s / n)), j = 1..n-1
        half = g.degree // 2
        return min(
            sum(2.0 * (1.0 - math.cos(2.0 * math.pi * j * s / n)) for s in range(1, half + 1))
            for j in range(1, n)
        )
    return None


def numeric_lambda(g: BaseGraph) -> float:
    """Second-smallest Laplacian eigenvalue via a dense symmetric eigensolver."""
    eig = np.linalg.eigvalsh(g.laplacian())
    return float(eig[1])


def algebraic_connectivity(g: BaseGraph, *, prefer_closed_form: bool = True) -> SpectralSummary:
    """Return the algebraic connectivity of ``g``, exact where a closed form exists."""
    if not _is_connected(g.num_agents, g.edges):
        raise DisconnectedGraph("algebraic connectivity requested for a disconnected graph")
    if prefer_closed_form:
        lam = _closed_form_lambda(g)
        if lam is not None:
            return SpectralSummary(lam, SpectralMethod.CLOSED_FORM)
    return SpectralSummary(numeric_lambda(g), SpectralMethod.NUMERIC)


@dataclass(frozen=True)
class CommSnapshot:
    """One round's communication graph.

    ``active`` is a boolean mask aligned with ``BaseGraph.edges``.
    """

    round: int
    active: np.ndarray
    gossip_weights: np.ndarray
    adjacency: np.ndarray  # boolean, symmetric, zero diagonal

    @property
    def num_agents(self) -> int:
        return self.gossip_weights.shape[0]

    def active_edges(self, g: BaseGraph) -> list[tuple[int, int]]:
        return [e for e, on in zip(g.edges, self.active) if on]

    def active_neighbors(self, i: int) -> np.ndarray:
        return np.flatnonzero(self.adjacency[i])


def gossip_matrix(n: int, active_pairs: np.ndarray) -> np.ndarray:
    """``I - Lap(G_t)/n`` for the edges listed in the ``(m, 2)`` array ``active_pairs``."""
    w = np.zeros((n, n))
    if len(active_pairs):
        i, j = active_pairs[:, 0], active_pairs[:, 1]
        w[i, j] = 1.0 / n
        w[j, i] = 1.0 / n
    np.fill_diagonal(w, 1.0 - w.sum(axis=1))
    return w


def check_probability(p: float) -> None:
    if not (0.0 < p <= 1.0) or math.isnan(p):
        raise InvalidProbability(f"link probability must lie in (0, 1], got {p}")


def sample_comm_graph(g: BaseGraph, p: float, t: int, rng: np.random.Generator) -> CommSnapshot:
    """Keep each base edge independently with probability ``p``.

    Exactly one uniform variate is drawn per base edge, in sorted edge order.
    """
    check_probability(p)
    active = rng.random(g.num_edges) < p
    pairs = g.edge_index[active]
    n = g.num_agents
    adj = np.zeros((n, n), dtype=bool)
    adj[pairs[:, 0], pairs[:, 1]] = True
    adj[pairs[:, 1], pairs[:, 0]] = True
    return CommSnapshot(t, active, gossip_matrix(n, pairs), adj)


def contraction_bound(g: BaseGraph, p: float) -> float:
    """Upper bound ``1 - p * lambda / N`` on the second eigenvalue of E[W^2]."""
    lam = algebraic_connectivity(g).lambda_second_smallest
    return 1.0 - p * lam / g.num_agents


@dataclass(frozen=True)
class ContractionEstimate:
    value: float
    std_error: float
    samples: int


def estimate_contraction(
    g: BaseGraph, p: float, samples: int, rng: np.random.Generator
) -> ContractionEstimate:
    """Monte Carlo estimate of the second-largest eigenvalue of E[W_t^T W_t].

    The standard error is the delta-method one: the Rayleigh quotient of each
    sample ``W^T W`` along the top non-consensus eigenvector of the average.
    """
    check_probability(p)
    if samples < 1:
        raise ValueError(f"samples must be >= 1, got {samples}")
    n = g.num_agents
    acc = np.zeros((n, n))
    mats = []
    keep = samples <= 20000
    for t in range(samples):
        w = sample_comm_graph(g, p, t, rng).gossip_weights
        ww = w.T @ w
        acc += ww
        if keep:
            mats.append(ww)
    mean = acc / samples
    vals, vecs = np.linalg.eigh(mean)
    # the uniform vector is always an eigenvector with eigenvalue 1; drop it
    ones = np.full(n, 1.0 / math.sqrt(n))
    overlap = np.abs(vecs.T @ ones)
    consensus = int(np.argmax(overlap))
    order = [k for k in np.argsort(vals)[::-1] if k != consensus]
    top = order[0]
    lam2 = float(vals[top])
    se = 0.0
    if keep and samples > 1:
        v = vecs[:, top]
        rq = np.array([v @ m @ v for m in mats])
        se = float(rq.std(ddof=1) / math.sqrt(samples))
    return ContractionEstimate(lam2, se, samples)
