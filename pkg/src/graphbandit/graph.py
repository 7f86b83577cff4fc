"""Directed feedback graphs and the combinatorial quantities built on them.

A graph on ``K`` actions is stored by in-neighbourhoods: ``in_neighbors[i]``
is the set of actions whose play reveals the loss of ``i``. A self-loop on
``i`` is simply ``i in in_neighbors[i]``.

The exact routines (:func:`independence_number_exact`,
:func:`weak_domination_number_exact`) are exponential-time test oracles and
refuse graphs above :data:`MAX_EXACT_ALPHA_NODES` /
:data:`MAX_EXACT_DOMINATION_NODES` nodes.
"""

from __future__ import annotations

import enum
import itertools
import math
import re
from dataclasses import dataclass
from functools import cached_property, lru_cache
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "MAX_EXACT_ALPHA_NODES",
    "MAX_EXACT_DOMINATION_NODES",
    "FeedbackGraph",
    "GraphError",
    "Observability",
    "classify",
    "format_graph",
    "greedy_weak_dominating_set",
    "independence_number_exact",
    "is_weak_dominating_set",
    "ix_quantity",
    "observation_probabilities",
    "observation_probability",
    "parse_graph",
    "read_graph_sequence",
    "self_loop_set",
    "self_loop_subgraph",
    "weak_domination_number_exact",
]

MAX_EXACT_ALPHA_NODES = 24
MAX_EXACT_DOMINATION_NODES = 20


class GraphError(ValueError):
    """Malformed graph, or a graph outside an operation's domain."""


class Observability(enum.Enum):
    STRONGLY_OBSERVABLE = "strongly_observable"
    WEAKLY_OBSERVABLE = "weakly_observable"
    UNOBSERVABLE = "unobservable"


@dataclass(frozen=True)
class FeedbackGraph:
    """Immutable directed graph on ``num_nodes`` actions.

    ``in_neighbors[i]`` holds every ``j`` with an edge ``j -> i``; playing
    ``j`` reveals the loss of ``i``.
    """

    num_nodes: int
    in_neighbors: tuple[frozenset[int], ...]

    def __post_init__(self):
        if not isinstance(self.num_nodes, (int, np.integer)) or self.num_nodes < 1:
            raise GraphError(f"num_nodes must be a positive integer, got {self.num_nodes!r}")
        object.__setattr__(self, "num_nodes", int(self.num_nodes))
        nbrs = tuple(frozenset(int(j) for j in s) for s in self.in_neighbors)
        if len(nbrs) != self.num_nodes:
            raise GraphError(
                f"expected {self.num_nodes} in-neighbour sets, got {len(nbrs)}"
            )
        for i, s in enumerate(nbrs):
            bad = [j for j in s if not 0 <= j < self.num_nodes]
            if bad:
                raise GraphError(f"node {i} has out-of-range in-neighbours {sorted(bad)}")
        object.__setattr__(self, "in_neighbors", nbrs)

    @classmethod
    def from_edges(cls, num_nodes: int, edges: Iterable[tuple[int, int]]) -> "FeedbackGraph":
        """Build from directed edges ``(src, dst)``: playing ``src`` reveals ``dst``."""
        nbrs: list[set[int]] = [set() for _ in range(num_nodes)]
        for src, dst in edges:
            if not 0 <= dst < num_nodes:
                raise GraphError(f"edge ({src}, {dst}) leaves the node range")
            nbrs[dst].add(src)
        return cls(num_nodes, tuple(frozenset(s) for s in nbrs))

    def __len__(self) -> int:
        return self.num_nodes

    def has_edge(self, src: int, dst: int) -> bool:
        return src in self.in_neighbors[dst]

    @cached_property
    def observer_matrix(self) -> np.ndarray:
        """``A[j, i] = 1`` iff ``j`` observes ``i``, so ``dist @ A`` gives every W_i."""
        a = np.zeros((self.num_nodes, self.num_nodes))
        for i, s in enumerate(self.in_neighbors):
            if s:
                a[list(s), i] = 1.0
        a.setflags(write=False)
        return a

    @cached_property
    def self_loop_mask(self) -> np.ndarray:
        m = np.array([i in s for i, s in enumerate(self.in_neighbors)], dtype=bool)
        m.setflags(write=False)
        return m

    @cached_property
    def revealed_by(self) -> tuple[np.ndarray, ...]:
        """``revealed_by[i]``: sorted nodes whose loss is shown when ``i`` is played."""
        out: list[list[int]] = [[] for _ in range(self.num_nodes)]
        for j, s in enumerate(self.in_neighbors):
            for i in s:
                out[i].append(j)
        return tuple(np.array(sorted(o), dtype=np.intp) for o in out)

    @cached_property
    def _undirected_masks(self) -> tuple[int, ...]:
        masks = [0] * self.num_nodes
        for i, s in enumerate(self.in_neighbors):
            for j in s:
                if j != i:
                    masks[i] |= 1 << j
                    masks[j] |= 1 << i
        return tuple(masks)

    def __str__(self) -> str:
        return format_graph(self)


@lru_cache(maxsize=4096)
def classify(g: FeedbackGraph) -> Observability:
    everyone = frozenset(range(g.num_nodes))
    strong = True
    for i, s in enumerate(g.in_neighbors):
        if not s:
            return Observability.UNOBSERVABLE
        if i not in s and s != everyone - {i}:
            strong = False
    return Observability.STRONGLY_OBSERVABLE if strong else Observability.WEAKLY_OBSERVABLE


def self_loop_set(g: FeedbackGraph) -> frozenset[int]:
    return frozenset(i for i, s in enumerate(g.in_neighbors) if i in s)


def _check_node(g: FeedbackGraph, i: int) -> None:
    if not 0 <= i < g.num_nodes:
        raise IndexError(f"node {i} out of range for a graph on {g.num_nodes} nodes")


def observation_probability(g: FeedbackGraph, dist: Sequence[float], i: int) -> float:
    """Probability that node ``i`` is observed when the action is drawn from ``dist``."""
    _check_node(g, i)
    w = math.fsum(float(dist[j]) for j in g.in_neighbors[i])
    return min(max(w, 0.0), 1.0)


def observation_probabilities(g: FeedbackGraph, dist: np.ndarray) -> np.ndarray:
    """Vector of W_i for every node; clipped into [0, 1] against rounding."""
    # entries are sums of nonnegative terms, so only the upper end can drift
    w = np.asarray(dist, dtype=float) @ g.observer_matrix
    return np.minimum(w, 1.0, out=w)


def ix_quantity(g: FeedbackGraph, dist: np.ndarray, gamma: float) -> float:
    """Sum over self-loop nodes of ``dist_i / (W_i + gamma)``.

    On a graph with self-loops everywhere this is at most
    ``2 a ln(1 + (ceil(K^2/gamma) + K) / a) + 2`` with ``a`` the independence
    number. For mixed graphs the bound applies to the self-loop subgraph
    only, so callers comparing against it should pass
    :func:`self_loop_subgraph` for the independence number.
    """
    if gamma < 0:
        raise ValueError(f"gamma must be nonnegative, got {gamma}")
    mask = g.self_loop_mask
    if not mask.any():
        return 0.0
    dist = np.asarray(dist, dtype=float)
    w = observation_probabilities(g, dist)
    return float(np.sum(dist[mask] / (w[mask] + gamma)))


def self_loop_subgraph(g: FeedbackGraph) -> tuple[FeedbackGraph | None, list[int]]:
    """Subgraph induced by the self-loop nodes, relabelled ``0..|S|-1``.

    Returns ``(None, [])`` when no node has a self-loop.
    """
    nodes = sorted(self_loop_set(g))
    if not nodes:
        return None, []
    index = {v: k for k, v in enumerate(nodes)}
    nbrs = tuple(
        frozenset(index[j] for j in g.in_neighbors[v] if j in index) for v in nodes
    )
    return FeedbackGraph(len(nodes), nbrs), nodes


def _max_independent(adj: tuple[int, ...], mask: int, memo: dict[int, int]) -> int:
    if mask == 0:
        return 0
    hit = memo.get(mask)
    if hit is not None:
        return hit
    min_v = max_v = -1
    min_deg, max_deg = 1 << 30, -1
    m = mask
    while m:
        low = m & -m
        v = low.bit_length() - 1
        m ^= low
        deg = bin(adj[v] & mask).count("1")
        if deg < min_deg:
            min_v, min_deg = v, deg
        if deg > max_deg:
            max_v, max_deg = v, deg
    if min_deg <= 1:
        # a vertex of degree <= 1 always belongs to some maximum independent set
        best = 1 + _max_independent(adj, mask & ~(1 << min_v) & ~adj[min_v], memo)
    else:
        without = _max_independent(adj, mask & ~(1 << max_v), memo)
        with_v = 1 + _max_independent(adj, mask & ~(1 << max_v) & ~adj[max_v], memo)
        best = max(without, with_v)
    memo[mask] = best
    return best


def independence_number_exact(g: FeedbackGraph, max_nodes: int = MAX_EXACT_ALPHA_NODES) -> int:
    """Size of a largest set of pairwise non-adjacent nodes.

    An edge in either direction between two distinct nodes makes them
    adjacent; self-loops are ignored.
    """
    if g.num_nodes > max_nodes:
        raise GraphError(
            f"exact independence number limited to {max_nodes} nodes, graph has {g.num_nodes}"
        )
    return _max_independent(g._undirected_masks, (1 << g.num_nodes) - 1, {})


def _coverage(g: FeedbackGraph) -> tuple[list[int], list[frozenset[int]]]:
    loopless = [j for j, s in enumerate(g.in_neighbors) if j not in s]
    orphans = [j for j in loopless if not g.in_neighbors[j]]
    if orphans:
        raise GraphError(f"graph is unobservable: nodes {orphans} have no in-neighbours")
    covers: list[set[int]] = [set() for _ in range(g.num_nodes)]
    for j in loopless:
        for i in g.in_neighbors[j]:
            covers[i].add(j)
    return loopless, [frozenset(c) for c in covers]


def is_weak_dominating_set(g: FeedbackGraph, dom: Iterable[int]) -> bool:
    dom = set(dom)
    return all(
        dom & g.in_neighbors[j] for j, s in enumerate(g.in_neighbors) if j not in s
    )


@lru_cache(maxsize=4096)
def greedy_weak_dominating_set(g: FeedbackGraph) -> frozenset[int]:
    """Greedy set cover of the loopless nodes.

    Picks, until every loopless node is observed, the node observing the
    most still-uncovered loopless nodes (smallest index on ties). The result
    is within a ``1 + ln K`` factor of the weak domination number.
    """
    loopless, covers = _coverage(g)
    uncovered = set(loopless)
    chosen: set[int] = set()
    while uncovered:
        best, gain = -1, 0
        for i, c in enumerate(covers):
            n = len(c & uncovered)
            if n > gain:
                best, gain = i, n
        chosen.add(best)
        uncovered -= covers[best]
    return frozenset(chosen)


def weak_domination_number_exact(
    g: FeedbackGraph, max_nodes: int = MAX_EXACT_DOMINATION_NODES
) -> int:
    """Smallest size of a node set observing every loopless node (exhaustive)."""
    if g.num_nodes > max_nodes:
        raise GraphError(
            f"exact weak domination number limited to {max_nodes} nodes, graph has {g.num_nodes}"
        )
    loopless, covers = _coverage(g)
    if not loopless:
        return 0
    target = sum(1 << j for j in loopless)
    cover_bits = [sum(1 << j for j in c) for c in covers]
    useful = [i for i, b in enumerate(cover_bits) if b]
    for size in range(1, len(useful) + 1):
        for combo in itertools.combinations(useful, size):
            acc = 0
            for i in combo:
                acc |= cover_bits[i]
            if acc == target:
                return size
    raise AssertionError("observable graph must admit a weak dominating set")


_ENTRY = re.compile(r"^(\d+):([\d,]*)$")


def parse_graph(text: str) -> FeedbackGraph:
    """Parse ``K=<int>; <i>:<j>,<j>,...; ...``. Whitespace is ignored.

    Nodes not listed get an empty in-neighbourhood.
    """
    compact = re.sub(r"\s+", "", text)
    parts = [p for p in compact.split(";") if p]
    if not parts or not parts[0].startswith("K="):
        raise GraphError(f"graph text must start with 'K=<int>': {text!r}")
    try:
        k = int(parts[0][2:])
    except ValueError:
        raise GraphError(f"bad node count in {parts[0]!r}") from None
    if k < 1:
        raise GraphError(f"node count must be positive, got {k}")
    nbrs: list[frozenset[int] | None] = [None] * k
    for part in parts[1:]:
        m = _ENTRY.match(part)
        if not m:
            raise GraphError(f"bad adjacency entry {part!r}")
        i = int(m.group(1))
        if i >= k:
            raise GraphError(f"node {i} out of range for K={k}")
        if nbrs[i] is not None:
            raise GraphError(f"node {i} listed twice")
        nbrs[i] = frozenset(int(x) for x in m.group(2).split(",") if x)
    return FeedbackGraph(k, tuple(s or frozenset() for s in nbrs))


def format_graph(g: FeedbackGraph) -> str:
    body = "; ".join(
        f"{i}:{','.join(str(j) for j in sorted(s))}" for i, s in enumerate(g.in_neighbors)
    )
    return f"K={g.num_nodes}; {body}"


def read_graph_sequence(path: str | Path) -> list[FeedbackGraph]:
    """One graph per non-blank line; ``#`` starts a comment."""
    path = Path(path)
    graphs = []
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise GraphError(f"cannot read graph file {path}: {exc}") from exc
    for lineno, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            graphs.append(parse_graph(line))
        except GraphError as exc:
            raise GraphError(f"{path}:{lineno}: {exc}") from None
    if not graphs:
        raise GraphError(f"{path}: no graphs found")
    return graphs
