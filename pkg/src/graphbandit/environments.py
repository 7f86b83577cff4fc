"""Graph families, loss sequences and the per-round environment.

An :class:`Environment` fixes ``(G_t, loss_t)`` at the start of round ``t``
from the actions of rounds ``1..t-1`` only, then turns the learner's action
into a :class:`~graphbandit.estimation.RoundFeedback`. Whether the learner
sees ``G_t`` before or after acting is up to the harness.
"""

from __future__ import annotations

import abc
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Sequence

import numpy as np

from .estimation import RoundFeedback
from .graph import (
    MAX_EXACT_ALPHA_NODES,
    MAX_EXACT_DOMINATION_NODES,
    FeedbackGraph,
    GraphError,
    Observability,
    classify,
    greedy_weak_dominating_set,
    independence_number_exact,
    read_graph_sequence,
    self_loop_subgraph,
    weak_domination_number_exact,
)
from .rng import derive_key, generator

__all__ = [
    "AdaptiveTargetingLosses",
    "BernoulliLosses",
    "Environment",
    "ErdosRenyiSelfAware",
    "GraphFamily",
    "GraphSequence",
    "GraphStats",
    "LateSwitchLosses",
    "LooplessComplete",
    "LossModel",
    "RevealingAction",
    "SelfLoopsOnly",
    "StarWeak",
    "UnionOfCliques",
    "exact_stats",
    "generate_graph",
    "late_switch_losses",
    "stochastic_losses",
]


@dataclass(frozen=True)
class GraphStats:
    """Independence number, weak domination number and self-loop-subgraph independence number.

    ``source`` is ``"declared"`` (known by construction), ``"exact"`` (brute
    force) or ``"upper_bound"`` (graph too large for brute force).
    """

    alpha: int
    d: int
    alpha_tilde: int
    source: str = "declared"


@lru_cache(maxsize=1024)
def exact_stats(g: FeedbackGraph) -> GraphStats:
    """Brute-force stats, falling back to upper bounds above the exact-search caps."""
    bounded = False
    if g.num_nodes <= MAX_EXACT_ALPHA_NODES:
        alpha = independence_number_exact(g)
    else:
        alpha, bounded = g.num_nodes, True
    if classify(g) is Observability.UNOBSERVABLE:
        raise GraphError("unobservable graph has no weak domination number")
    if g.num_nodes <= MAX_EXACT_DOMINATION_NODES:
        d = weak_domination_number_exact(g)
    else:
        d, bounded = len(greedy_weak_dominating_set(g)), True
    sub, nodes = self_loop_subgraph(g)
    if sub is None:
        alpha_tilde = 0
    elif sub.num_nodes <= MAX_EXACT_ALPHA_NODES:
        alpha_tilde = independence_number_exact(sub)
    else:
        alpha_tilde, bounded = len(nodes), True
    return GraphStats(alpha, d, alpha_tilde, "upper_bound" if bounded else "exact")


class GraphFamily(abc.ABC):
    """A rule producing ``G_t`` for each round, with its stats."""

    num_nodes: int
    static: bool = True

    @abc.abstractmethod
    def graph(self, t: int) -> FeedbackGraph: ...

    def stats(self, t: int) -> GraphStats:
        return exact_stats(self.graph(t))

    def stats_totals(self, horizon: int) -> tuple[float, float, float, int, int]:
        """``(sum alpha, sum d, sum alpha~, max alpha, max alpha~)`` over rounds ``1..horizon``."""
        if self.static:
            s = self.stats(1)
            return (horizon * s.alpha, horizon * s.d, horizon * s.alpha_tilde,
                    s.alpha, s.alpha_tilde)
        sa = sd = st = 0
        ma = mt = 0
        for t in range(1, horizon + 1):
            s = self.stats(t)
            sa, sd, st = sa + s.alpha, sd + s.d, st + s.alpha_tilde
            ma, mt = max(ma, s.alpha), max(mt, s.alpha_tilde)
        return sa, sd, st, ma, mt


class _Static(GraphFamily):
    def __init__(self, g: FeedbackGraph, stats: GraphStats):
        self._g = g
        self._stats = stats
        self.num_nodes = g.num_nodes

    def graph(self, t: int) -> FeedbackGraph:
        return self._g

    def stats(self, t: int) -> GraphStats:
        return self._stats

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self._g})"


class SelfLoopsOnly(_Static):
    """Plain bandit feedback: every node sees only itself."""

    def __init__(self, k: int):
        if k < 1:
            raise GraphError("need at least one node")
        g = FeedbackGraph(k, tuple(frozenset({i}) for i in range(k)))
        super().__init__(g, GraphStats(k, 0, k))


class UnionOfCliques(_Static):
    """Disjoint self-aware cliques; playing any member reveals the whole clique."""

    def __init__(self, sizes: Sequence[int]):
        sizes = [int(s) for s in sizes]
        if not sizes or any(s < 1 for s in sizes):
            raise GraphError(f"clique sizes must be positive, got {sizes}")
        nbrs: list[frozenset[int]] = []
        start = 0
        for s in sizes:
            block = frozenset(range(start, start + s))
            nbrs.extend([block] * s)
            start += s
        m = len(sizes)
        super().__init__(FeedbackGraph(start, tuple(nbrs)), GraphStats(m, 0, m))


class LooplessComplete(_Static):
    """Every node observes every other node, none observes itself."""

    def __init__(self, k: int):
        if k < 2:
            raise GraphError("loopless complete graph needs at least two nodes")
        g = FeedbackGraph(k, tuple(frozenset(range(k)) - {i} for i in range(k)))
        super().__init__(g, GraphStats(1, 2, 0))


class RevealingAction(_Static):
    """Node 0 has a self-loop and reveals everything; other nodes are loopless and seen only via 0."""

    def __init__(self, k: int):
        if k < 2:
            raise GraphError("revealing-action graph needs at least two nodes")
        nbrs = (frozenset({0}),) + tuple(frozenset({0}) for _ in range(1, k))
        super().__init__(FeedbackGraph(k, nbrs), GraphStats(k - 1, 1, 1))


class StarWeak(_Static):
    """``hubs`` self-loop hubs; the remaining loopless leaves are split into contiguous blocks, one per hub."""

    def __init__(self, k: int, hubs: int):
        if hubs < 1 or k < 2 * hubs:
            raise GraphError(f"star graph needs 1 <= hubs and 2*hubs <= K, got K={k}, hubs={hubs}")
        leaves = k - hubs
        nbrs: list[frozenset[int]] = [frozenset({h}) for h in range(hubs)]
        for n in range(leaves):
            nbrs.append(frozenset({n * hubs // leaves}))
        super().__init__(FeedbackGraph(k, tuple(nbrs)), GraphStats(leaves, hubs, hubs))


class ErdosRenyiSelfAware(GraphFamily):
    """Self-loops everywhere plus each other directed edge with probability ``density``, redrawn every round."""

    static = False

    def __init__(self, k: int, density: float, seed: int):
        if k < 1 or not 0.0 <= density <= 1.0:
            raise GraphError(f"bad Erdos-Renyi parameters K={k}, density={density}")
        self.num_nodes = k
        self.density = density
        self.seed = seed

    @lru_cache(maxsize=256)
    def graph(self, t: int) -> FeedbackGraph:
        rng = generator(derive_key("erdos-renyi", self.seed, t))
        edges = rng.random((self.num_nodes, self.num_nodes)) < self.density
        np.fill_diagonal(edges, True)
        return FeedbackGraph(
            self.num_nodes,
            tuple(frozenset(np.flatnonzero(edges[:, i]).tolist()) for i in range(self.num_nodes)),
        )

    def stats(self, t: int) -> GraphStats:
        g = self.graph(t)
        if g.num_nodes <= MAX_EXACT_ALPHA_NODES:
            a = independence_number_exact(g)
            return GraphStats(a, 0, a, "exact")
        return GraphStats(g.num_nodes, 0, g.num_nodes, "upper_bound")


class GraphSequence(GraphFamily):
    """Graphs read from a sequence file, cycled: round ``t`` uses entry ``(t-1) mod n``."""

    def __init__(self, graphs: Sequence[FeedbackGraph]):
        if not graphs:
            raise GraphError("empty graph sequence")
        sizes = {g.num_nodes for g in graphs}
        if len(sizes) != 1:
            raise GraphError(f"graphs in a sequence must share K, got {sorted(sizes)}")
        self.graphs = tuple(graphs)
        self.num_nodes = sizes.pop()
        self.static = len(self.graphs) == 1

    @classmethod
    def from_file(cls, path: str | Path) -> "GraphSequence":
        return cls(read_graph_sequence(path))

    def graph(self, t: int) -> FeedbackGraph:
        return self.graphs[(t - 1) % len(self.graphs)]


def generate_graph(family: GraphFamily, t: int) -> tuple[FeedbackGraph, GraphStats]:
    return family.graph(t), family.stats(t)


class LossModel(abc.ABC):
    """Produces the hidden loss vector of round ``t`` from the previous actions."""

    @abc.abstractmethod
    def losses(self, t: int, history: Sequence[int], rng: np.random.Generator) -> np.ndarray: ...


@dataclass
class BernoulliLosses(LossModel):
    means: np.ndarray

    def __post_init__(self):
        self.means = np.asarray(self.means, dtype=float)
        if np.any(self.means < 0) or np.any(self.means > 1):
            raise ValueError("Bernoulli means must lie in [0, 1]")

    def losses(self, t, history, rng):
        return (rng.random(self.means.size) < self.means).astype(float)


@dataclass
class LateSwitchLosses(LossModel):
    """Arm 0 costs 0 through ``switch_round`` and 1 afterwards; the rest always cost 1/2."""

    num_arms: int
    switch_round: int

    def losses(self, t, history, rng):
        out = np.full(self.num_arms, 0.5)
        out[0] = 0.0 if t <= self.switch_round else 1.0
        return out


@dataclass
class AdaptiveTargetingLosses(LossModel):
    """Punish the learner's favourite arm of the last ``window`` rounds.

    The most played non-safe arm (lowest index on ties) costs 1, ``safe_arm``
    costs 0 and everything else 1/2.
    """

    num_arms: int
    window: int = 50
    safe_arm: int = 1

    def __post_init__(self):
        if self.num_arms == 1:
            self.safe_arm = 0
        if not 0 <= self.safe_arm < self.num_arms:
            raise ValueError(f"safe arm {self.safe_arm} out of range")
        if self.window < 1:
            raise ValueError("window must be positive")

    def losses(self, t, history, rng):
        recent = Counter(history[-self.window:])
        out = np.full(self.num_arms, 0.5)
        candidates = [a for a in range(self.num_arms) if a != self.safe_arm]
        if candidates:
            target = max(candidates, key=lambda a: (recent[a], -a))
            out[target] = 1.0
        out[self.safe_arm] = 0.0
        return out


def stochastic_losses(means: Sequence[float], horizon: int, rng: np.random.Generator) -> np.ndarray:
    """``horizon x K`` matrix of independent Bernoulli losses."""
    model = BernoulliLosses(np.asarray(means, dtype=float))
    return np.stack([model.losses(t, (), rng) for t in range(1, horizon + 1)])


def late_switch_losses(num_arms: int, switch_round: int, horizon: int) -> np.ndarray:
    model = LateSwitchLosses(num_arms, switch_round)
    return np.stack([model.losses(t, (), None) for t in range(1, horizon + 1)])


@dataclass
class RoundSetup:
    t: int
    graph: FeedbackGraph
    stats: GraphStats


class Environment:
    """Couples a graph family and a loss model for one run.

    ``begin_round`` fixes ``G_t`` and the hidden loss vector before the
    learner acts; ``play`` takes the action and returns the feedback.
    """

    def __init__(self, family: GraphFamily, loss_model: LossModel, rng: np.random.Generator):
        self.family = family
        self.loss_model = loss_model
        self.rng = rng
        self.num_arms = family.num_nodes
        self.t = 0
        self.history: list[int] = []
        self._setup: RoundSetup | None = None
        self._loss: np.ndarray | None = None

    def begin_round(self) -> RoundSetup:
        if self._setup is not None:
            raise RuntimeError("previous round not finished")
        self.t += 1
        graph, stats = generate_graph(self.family, self.t)
        # loss models get the live history list (rounds 1..t-1) and must not mutate it
        loss = np.asarray(self.loss_model.losses(self.t, self.history, self.rng), dtype=float)
        if loss.shape != (self.num_arms,) or not (loss.min() >= 0 and loss.max() <= 1):
            raise ValueError(f"round {self.t}: loss vector must lie in [0, 1]^{self.num_arms}")
        loss.setflags(write=False)
        self._setup = RoundSetup(self.t, graph, stats)
        self._loss = loss
        return self._setup

    @property
    def hidden_loss(self) -> np.ndarray:
        if self._loss is None:
            raise RuntimeError("no round in progress")
        return self._loss

    def play(self, action: int) -> RoundFeedback:
        if self._setup is None:
            raise RuntimeError("begin_round() must come first")
        if not 0 <= action < self.num_arms:
            raise ValueError(f"action {action} out of range")
        fb = RoundFeedback.from_losses(self._setup.graph, action, self._loss)
        self.history.append(int(action))
        self._setup = None
        return fb
