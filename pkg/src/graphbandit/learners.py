"""Bandit learners for time-varying feedback graphs.

Every learner follows the same two-call round:

* ``decide()`` (uninformed) or ``decide(graph)`` (informed) returns the
  sampling distribution and the drawn action;
* ``update(graph, feedback)`` consumes the round's feedback and advances the
  learner by exactly one round, returning a :class:`RoundRecord`.

``informed`` on the class tells the harness which ``decide`` shape to use,
so an uninformed learner has no way to see the graph before it acts.
"""

from __future__ import annotations

import abc
import math
from dataclasses import dataclass, field
from typing import Callable, ClassVar, NamedTuple

import numpy as np

from .errors import ProtocolViolation
from .estimation import RoundFeedback, build_bias, build_ix_estimator
from .graph import (
    FeedbackGraph,
    Observability,
    classify,
    greedy_weak_dominating_set,
    observation_probabilities,
)
from .simplex import dominating_mix, entropy_omd_step, sample, uniform, uniform_mix

__all__ = [
    "Decision",
    "DoublingWrapper",
    "Exp3IX",
    "Exp3IXParams",
    "Learner",
    "LearnerState",
    "RoundRecord",
    "StrongObsLearner",
    "StrongParams",
    "WeakObsLearner",
    "WeakParams",
    "exp3ix_params",
    "exp3ix_round",
    "strong_obs_round",
    "strong_params",
    "weak_obs_round",
    "weak_params",
]


def _log_inv_delta(delta: float) -> float:
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    return math.log(1.0 / delta)


@dataclass(frozen=True)
class Exp3IXParams:
    eta: float
    gamma: float


@dataclass(frozen=True)
class StrongParams:
    eta: float
    gamma: float
    beta: float

    def __post_init__(self):
        if not 0.0 < self.eta <= 1.0:
            raise ValueError(f"eta must lie in (0, 1], got {self.eta}")
        if self.gamma < 0 or self.beta < 0:
            raise ValueError("gamma and beta must be nonnegative")


@dataclass(frozen=True)
class WeakParams:
    eps: float
    gamma: float
    eta: float

    def __post_init__(self):
        if not 0.0 <= self.eps <= 0.5:
            raise ValueError(f"eps must lie in [0, 1/2], got {self.eps}")
        if not self.eta > 0 or self.gamma < 0:
            raise ValueError("eta must be positive and gamma nonnegative")


def exp3ix_params(sum_alpha: float, delta: float) -> Exp3IXParams:
    """``eta = gamma = sqrt(ln(1/delta) / sum_alpha)``, capped at 1/2."""
    if not sum_alpha > 0:
        raise ValueError(f"sum_alpha must be positive, got {sum_alpha}")
    v = min(math.sqrt(_log_inv_delta(delta) / sum_alpha), 0.5)
    return Exp3IXParams(eta=v, gamma=v)


def strong_params(sum_alpha: float, delta: float) -> StrongParams:
    """``eta = gamma = beta = min(1 / sqrt(sum_alpha ln(1/delta)), 1/2)``."""
    if not sum_alpha > 0:
        raise ValueError(f"sum_alpha must be positive, got {sum_alpha}")
    v = min(1.0 / math.sqrt(sum_alpha * _log_inv_delta(delta)), 0.5)
    return StrongParams(eta=v, gamma=v, beta=v)


def weak_params(horizon: int, sum_d: float, sum_alpha_tilde: float, delta: float) -> WeakParams:
    """Tuning for the dominating-set learner given ``T``, ``sum d_t`` and ``sum alpha~_t``."""
    if horizon < 1 or not sum_d > 0 or not sum_alpha_tilde > 0:
        raise ValueError("horizon, sum_d and sum_alpha_tilde must be positive")
    log_d = _log_inv_delta(delta)
    t3 = horizon ** (1.0 / 3.0)
    eps = min(0.5, t3 * sum_d ** (-2.0 / 3.0) * log_d ** (1.0 / 3.0))
    gamma = math.sqrt(log_d / sum_alpha_tilde)
    eta = min((t3 * sum_d ** (1.0 / 3.0) * log_d ** (1.0 / 3.0)) ** -1.0, gamma)
    return WeakParams(eps=eps, gamma=gamma, eta=eta)


class Decision(NamedTuple):
    dist: np.ndarray
    action: int


@dataclass(frozen=True)
class RoundRecord:
    """Per-round diagnostics reported by ``update``."""

    q: float = 0.0
    triggered: bool = False
    special_node: int | None = None
    epoch: int = 0
    clamped: bool = False


@dataclass
class LearnerState:
    p: np.ndarray
    round: int = 0
    cumulative_q: float = 0.0
    epoch: int = 0
    params: object = None


def _self_loop_q(p: np.ndarray, w: np.ndarray, mask: np.ndarray, gamma: float) -> float:
    if mask.all():
        return float((p / (w + gamma)).sum())
    if not mask.any():
        return 0.0
    return float((p[mask] / (w[mask] + gamma)).sum())


def exp3ix_round(
    p: np.ndarray,
    graph: FeedbackGraph,
    dist: np.ndarray,
    fb: RoundFeedback,
    eta: float,
    gamma: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Exp3-IX on a self-aware graph: estimate with ``+gamma`` everywhere, then one OMD step.

    ``dist`` is the distribution the action was drawn from (``p`` itself in
    plain Exp3-IX). Returns ``(p_next, estimate)``.
    """
    if not graph.self_loop_mask.all():
        raise ProtocolViolation("Exp3-IX needs a self-aware graph (a self-loop on every node)")
    est = build_ix_estimator(graph, dist, fb, gamma)
    return entropy_omd_step(p, est, eta), est


def strong_obs_round(p: np.ndarray, mixed: np.ndarray, graph: FeedbackGraph,
                    fb: RoundFeedback, params: StrongParams):
    """One round of the strongly observable algorithm after the draw from ``mixed``.

    Returns ``(p_next, estimate, bias_record, q)`` where ``q`` sums
    ``p_i / (W_i + gamma)`` over the self-loop nodes.
    """
    w = observation_probabilities(graph, mixed)
    est = build_ix_estimator(graph, mixed, fb, params.gamma, obs_prob=w)
    bias = build_bias(graph, mixed, params.beta, obs_prob=w)
    p_next = entropy_omd_step(p, est + bias.bias, params.eta)
    q = _self_loop_q(p, w, graph.self_loop_mask, params.gamma)
    return p_next, est, bias, q


def weak_obs_round(p: np.ndarray, mixed: np.ndarray, graph: FeedbackGraph,
                  fb: RoundFeedback, params: WeakParams):
    """One round of the dominating-set algorithm: no bias, otherwise as above."""
    w = observation_probabilities(graph, mixed)
    est = build_ix_estimator(graph, mixed, fb, params.gamma, obs_prob=w)
    p_next = entropy_omd_step(p, est, params.eta)
    q = _self_loop_q(p, w, graph.self_loop_mask, params.gamma)
    return p_next, est, q


class Learner(abc.ABC):
    """Common round bookkeeping: current ``p``, round counter, last decision."""

    informed: ClassVar[bool] = False
    name: ClassVar[str] = ""

    def __init__(self, num_arms: int, rng: np.random.Generator):
        if num_arms < 1:
            raise ValueError("need at least one arm")
        self.num_arms = num_arms
        self.rng = rng
        self.p = uniform(num_arms)
        self.round = 0
        self.cumulative_q = 0.0
        self._pending: Decision | None = None

    @property
    def last_decision(self) -> Decision | None:
        return self._pending

    def _draw(self, dist: np.ndarray) -> Decision:
        if self._pending is not None:
            raise ProtocolViolation("decide() called twice without update()")
        self._pending = Decision(dist, sample(dist, self.rng))
        return self._pending

    def _take_pending(self, fb: RoundFeedback) -> Decision:
        pending = self._pending
        if pending is None:
            raise ProtocolViolation("update() called before decide()")
        if fb.chosen != pending.action:
            raise ProtocolViolation(
                f"feedback is for action {fb.chosen} but the learner played {pending.action}"
            )
        return pending

    def _finish(self, p_next: np.ndarray, q: float) -> None:
        self.p = p_next
        self.round += 1
        self.cumulative_q += q
        self._pending = None

    @property
    def state(self) -> LearnerState:
        return LearnerState(self.p.copy(), self.round, self.cumulative_q, 0,
                            getattr(self, "params", None))

    @abc.abstractmethod
    def update(self, graph: FeedbackGraph, feedback: RoundFeedback) -> RoundRecord: ...


class Exp3IX(Learner):
    """Exp3 with implicit exploration; self-aware graphs only."""

    name = "exp3ix"

    def __init__(self, num_arms: int, params: Exp3IXParams, rng: np.random.Generator):
        super().__init__(num_arms, rng)
        self.params = params

    def decide(self) -> Decision:
        return self._draw(self.p.copy())

    def update(self, graph: FeedbackGraph, feedback: RoundFeedback) -> RoundRecord:
        pending = self._take_pending(feedback)
        p_next, _ = exp3ix_round(self.p, graph, pending.dist, feedback,
                                self.params.eta, self.params.gamma)
        w = observation_probabilities(graph, pending.dist)
        q = _self_loop_q(self.p, w, graph.self_loop_mask, self.params.gamma)
        self._finish(p_next, q)
        return RoundRecord(q=q)


class StrongObsLearner(Learner):
    """Uniform exploration + implicit exploration + positive bias on heavy loopless arms.

    Uninformed: the graph arrives only in ``update``. A graph that is not
    strongly observable raises :class:`ProtocolViolation` and leaves the
    state untouched.
    """

    name = "strong"

    def __init__(self, num_arms: int, params: StrongParams, rng: np.random.Generator):
        super().__init__(num_arms, rng)
        self.params = params
        self.triggered_rounds: list[int] = []

    def decide(self) -> Decision:
        return self._draw(uniform_mix(self.p, self.params.eta))

    def update(self, graph: FeedbackGraph, feedback: RoundFeedback) -> RoundRecord:
        pending = self._take_pending(feedback)
        kind = classify(graph)
        if kind is not Observability.STRONGLY_OBSERVABLE:
            raise ProtocolViolation(
                f"round {self.round + 1}: graph is {kind.value}, strong learner needs strongly observable"
            )
        p_next, _, bias, q = strong_obs_round(self.p, pending.dist, graph, feedback, self.params)
        if bias.triggered:
            self.triggered_rounds.append(self.round + 1)
        self._finish(p_next, q)
        return RoundRecord(q=q, triggered=bias.triggered, special_node=bias.special_node)


class WeakObsLearner(Learner):
    """Exploration over a greedy weakly dominating set; informed protocol.

    The per-round exploration rate is ``min(eps, 1 / (2 |D_t|))`` so that
    the mixture stays a distribution; ``clamp_count`` counts rounds where the
    cap was active. ``update`` works from the graph handed to ``decide`` and
    does not touch its ``graph`` argument.
    """

    informed = True
    name = "weak"

    def __init__(self, num_arms: int, params: WeakParams, rng: np.random.Generator):
        super().__init__(num_arms, rng)
        self.params = params
        self.clamp_count = 0
        self._graph: FeedbackGraph | None = None
        self._clamped = False

    def decide(self, graph: FeedbackGraph) -> Decision:
        if classify(graph) is Observability.UNOBSERVABLE:
            raise ProtocolViolation(f"round {self.round + 1}: graph is unobservable")
        dom = greedy_weak_dominating_set(graph)
        eps = self.params.eps
        self._clamped = bool(dom) and eps * len(dom) > 0.5
        if self._clamped:
            eps = 1.0 / (2 * len(dom))
        mixed = dominating_mix(self.p, eps, dom)
        decision = self._draw(mixed)
        self._graph = graph
        return decision

    def update(self, graph: FeedbackGraph | None, feedback: RoundFeedback) -> RoundRecord:
        pending = self._take_pending(feedback)
        g = self._graph
        p_next, _, q = weak_obs_round(self.p, pending.dist, g, feedback, self.params)
        clamped = self._clamped
        self.clamp_count += clamped
        self._graph = None
        self._finish(p_next, q)
        return RoundRecord(q=q, clamped=clamped)


@dataclass
class EpochMark:
    round: int
    guess: float


@dataclass
class _DoublingState:
    guess: float
    epoch_q: float = 0.0
    epoch: int = 0
    marks: list[EpochMark] = field(default_factory=list)


class DoublingWrapper:
    """Parameter-free strong learner via doubling on the running sum of ``Q_t``.

    Parameters come from :func:`strong_params` with the current guess in
    place of ``sum alpha_t``. Once the in-epoch sum of ``Q_t`` exceeds the
    guess, the guess doubles and a fresh inner learner (uniform ``p``) takes
    over from the next round.
    """

    name = "strong+doubling"

    def __init__(self, inner_factory: Callable[[StrongParams], Learner], delta: float,
                 initial_guess: float = 1.0):
        if not initial_guess > 0:
            raise ValueError("initial_guess must be positive")
        self.inner_factory = inner_factory
        self.delta = delta
        self._s = _DoublingState(guess=float(initial_guess))
        self._s.marks.append(EpochMark(1, self._s.guess))
        self.inner = inner_factory(strong_params(self._s.guess, delta))
        self.informed = self.inner.informed
        self.round = 0

    @property
    def epoch(self) -> int:
        return self._s.epoch

    @property
    def guess(self) -> float:
        return self._s.guess

    @property
    def epoch_marks(self) -> list[EpochMark]:
        return list(self._s.marks)

    @property
    def p(self) -> np.ndarray:
        return self.inner.p

    @property
    def params(self) -> StrongParams:
        return self.inner.params

    @property
    def last_decision(self) -> Decision | None:
        return self.inner.last_decision

    @property
    def state(self) -> LearnerState:
        return LearnerState(self.p.copy(), self.round, self._s.epoch_q, self._s.epoch,
                            self.inner.params)

    def decide(self, *graph) -> Decision:
        return self.inner.decide(*graph)

    def observe_q(self, q: float) -> bool:
        """Feed one round's ``Q_t``; returns True when this closes the epoch."""
        self.round += 1
        s = self._s
        s.epoch_q += q
        if s.epoch_q <= s.guess:
            return False
        s.guess *= 2.0
        s.epoch += 1
        s.epoch_q = 0.0
        s.marks.append(EpochMark(self.round + 1, s.guess))
        return True

    def update(self, graph: FeedbackGraph, feedback: RoundFeedback) -> RoundRecord:
        rec = self.inner.update(graph, feedback)
        epoch = self._s.epoch
        if self.observe_q(rec.q):
            self.inner = self.inner_factory(strong_params(self._s.guess, self.delta))
        return RoundRecord(q=rec.q, triggered=rec.triggered, special_node=rec.special_node,
                           epoch=epoch, clamped=rec.clamped)
