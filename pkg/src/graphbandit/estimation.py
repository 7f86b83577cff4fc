"""Loss estimators built from one round of graph feedback.

Self-loop nodes get the implicit-exploration estimate
``loss / (W + gamma)``, which under-estimates in expectation by the factor
``W / (W + gamma)``. Loopless nodes get the plain importance-weighted
``loss / W``, unbiased whenever ``W > 0``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import ProtocolViolation
from .graph import FeedbackGraph, observation_probabilities

__all__ = [
    "BiasRecord",
    "RoundFeedback",
    "build_bias",
    "build_ix_estimator",
    "estimator_expectation_oracle",
]


@dataclass(frozen=True)
class RoundFeedback:
    """What the learner sees after playing ``chosen``.

    ``nodes`` lists, in increasing order, every ``j`` with ``chosen`` in
    ``N_in(j)``; ``losses[k]`` is the loss of ``nodes[k]``.
    """

    chosen: int
    nodes: np.ndarray
    losses: np.ndarray

    @classmethod
    def from_losses(cls, g: FeedbackGraph, chosen: int, loss: np.ndarray) -> "RoundFeedback":
        nodes = g.revealed_by[chosen]
        return cls(int(chosen), nodes, np.asarray(loss, dtype=float)[nodes])

    @property
    def observed(self) -> Mapping[int, float]:
        return {int(j): float(v) for j, v in zip(self.nodes, self.losses)}

    def check_consistent(self, g: FeedbackGraph) -> None:
        expected = g.revealed_by[self.chosen]
        if not np.array_equal(np.asarray(self.nodes), expected):
            raise ProtocolViolation(
                f"feedback for action {self.chosen} reveals {list(self.nodes)}, "
                f"graph says {expected.tolist()}"
            )
        if len(self.losses) and (self.losses.min() < 0 or self.losses.max() > 1):
            raise ProtocolViolation("observed losses must lie in [0, 1]")


@dataclass(frozen=True)
class BiasRecord:
    bias: np.ndarray
    triggered: bool
    special_node: int | None = None


def build_ix_estimator(
    g: FeedbackGraph,
    sampling_dist: np.ndarray,
    fb: RoundFeedback,
    gamma: float,
    obs_prob: np.ndarray | None = None,
) -> np.ndarray:
    """Dense estimate: ``loss_i / (W_i + gamma [i has a self-loop])`` on observed nodes, 0 elsewhere.

    ``obs_prob`` may carry precomputed ``W`` for the same graph and distribution.
    """
    if gamma < 0:
        raise ValueError(f"gamma must be nonnegative, got {gamma}")
    w = observation_probabilities(g, sampling_dist) if obs_prob is None else obs_prob
    est = np.zeros(g.num_nodes)
    nodes = fb.nodes
    if len(nodes) == 0:
        return est
    denom = w[nodes] + gamma * g.self_loop_mask[nodes]
    if denom.min() <= 0:
        bad = [int(j) for j, d in zip(nodes, denom) if d <= 0]
        raise ProtocolViolation(f"nodes {bad} observed with zero observation probability")
    est[nodes] = fb.losses / denom
    return est


def build_bias(
    g: FeedbackGraph,
    sampling_dist: np.ndarray,
    beta: float,
    obs_prob: np.ndarray | None = None,
) -> BiasRecord:
    """Pessimistic bias ``beta / W_j`` on the loopless node (if any) drawn with probability > 1/2."""
    if beta < 0:
        raise ValueError(f"beta must be nonnegative, got {beta}")
    bias = np.zeros(g.num_nodes)
    dist = np.asarray(sampling_dist)
    j = int(dist.argmax())
    # at most one entry can exceed 1/2, so the argmax is the only candidate
    if not dist[j] > 0.5 or g.self_loop_mask[j]:
        return BiasRecord(bias, False)
    w = observation_probabilities(g, sampling_dist) if obs_prob is None else obs_prob
    if w[j] <= 0:
        raise ProtocolViolation(f"bias target {j} has zero observation probability")
    bias[j] = beta / w[j]
    return BiasRecord(bias, True, j)


def estimator_expectation_oracle(
    g: FeedbackGraph, sampling_dist: np.ndarray, true_loss: np.ndarray, gamma: float
) -> np.ndarray:
    """Exact ``E[estimate]`` by enumerating every possible action."""
    dist = np.asarray(sampling_dist, dtype=float)
    true_loss = np.asarray(true_loss, dtype=float)
    total = np.zeros(g.num_nodes)
    for a in range(g.num_nodes):
        if dist[a] == 0:
            continue
        fb = RoundFeedback.from_losses(g, a, true_loss)
        total += dist[a] * build_ix_estimator(g, dist, fb, gamma)
    return total
