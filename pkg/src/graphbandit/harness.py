"""Seeded Monte-Carlo runs, regret curves, quantiles and bound ratios."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from typing import Sequence

import numpy as np

from .environments import (
    AdaptiveTargetingLosses,
    BernoulliLosses,
    Environment,
    ErdosRenyiSelfAware,
    GraphFamily,
    GraphSequence,
    LateSwitchLosses,
    LooplessComplete,
    LossModel,
    RevealingAction,
    SelfLoopsOnly,
    StarWeak,
    UnionOfCliques,
)
from .errors import ConfigError
from .graph import GraphError
from .learners import (
    DoublingWrapper,
    Exp3IX,
    Exp3IXParams,
    StrongObsLearner,
    StrongParams,
    WeakObsLearner,
    WeakParams,
    exp3ix_params,
    strong_params,
    weak_params,
)
from .rng import ALGORITHM_ID, RunStreams

LEARNERS = ("exp3ix", "strong", "weak", "strong+doubling")
GRAPHS = ("self_loops", "union_of_cliques", "loopless_complete", "revealing_action",
          "star_weak", "erdos_renyi", "sequence")
LOSSES = ("bernoulli", "late_switch", "adaptive", "zero")


@dataclass(frozen=True)
class RunConfig:
    """Everything that determines a run's output. Field names are the config-file keys."""

    learner: str = "strong"
    protocol: str | None = None
    horizon: int = 1000
    repetitions: int = 10
    master_seed: int = 0
    delta: float = 0.05
    # graph family
    graph: str = "self_loops"
    num_arms: int | None = None
    clique_sizes: tuple[int, ...] | None = None
    hubs: int = 1
    density: float = 0.3
    graph_seed: int = 0
    graph_file: str | None = None
    # losses
    losses: str = "bernoulli"
    loss_means: tuple[float, ...] | None = None
    best_arm: int = 0
    best_mean: float = 0.3
    gap: float = 0.2
    switch_round: int | None = None
    window: int = 50
    safe_arm: int = 1
    # parameter overrides
    eta: float | None = None
    gamma: float | None = None
    beta: float | None = None
    eps: float | None = None
    initial_guess: float = 1.0
    # execution / output
    workers: int = 1
    out_dir: str = "results"

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if v is None or f.name in ("clique_sizes", "loss_means"):
                continue
            kind = f.type.split(" |")[0]
            if kind == "int" and (isinstance(v, bool) or not isinstance(v, int)):
                raise ConfigError(f"{f.name} must be an integer, got {v!r}")
            if kind == "float":
                if isinstance(v, bool) or not isinstance(v, (int, float)):
                    raise ConfigError(f"{f.name} must be a number, got {v!r}")
                object.__setattr__(self, f.name, float(v))
            if kind == "str" and not isinstance(v, str):
                raise ConfigError(f"{f.name} must be a string, got {v!r}")
        if self.learner not in LEARNERS:
            raise ConfigError(f"learner must be one of {LEARNERS}, got {self.learner!r}")
        protocol = self.protocol or ("informed" if self.learner == "weak" else "uninformed")
        if protocol not in ("informed", "uninformed"):
            raise ConfigError(f"protocol must be informed or uninformed, got {protocol!r}")
        if self.learner == "weak" and protocol != "informed":
            raise ConfigError("the weak learner needs the informed protocol")
        object.__setattr__(self, "protocol", protocol)
        if self.horizon < 1 or self.repetitions < 1:
            raise ConfigError("horizon and repetitions must be at least 1")
        if not 0.0 < self.delta < 1.0:
            raise ConfigError(f"delta must lie in (0, 1), got {self.delta}")
        if self.graph not in GRAPHS:
            raise ConfigError(f"graph must be one of {GRAPHS}, got {self.graph!r}")
        if self.losses not in LOSSES:
            raise ConfigError(f"losses must be one of {LOSSES}, got {self.losses!r}")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        for name in ("clique_sizes", "loss_means"):
            v = getattr(self, name)
            if v is not None:
                object.__setattr__(self, name, tuple(v))

    @classmethod
    def from_mapping(cls, data: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    def replace(self, **changes) -> "RunConfig":
        data = asdict(self)
        data.update(changes)
        return RunConfig(**data)


def build_family(cfg: RunConfig) -> GraphFamily:
    try:
        if cfg.graph == "union_of_cliques":
            if not cfg.clique_sizes:
                raise ConfigError("union_of_cliques needs clique_sizes")
            fam = UnionOfCliques(cfg.clique_sizes)
        elif cfg.graph == "sequence":
            if not cfg.graph_file:
                raise ConfigError("sequence graphs need graph_file")
            fam = GraphSequence.from_file(cfg.graph_file)
        else:
            if cfg.num_arms is None:
                raise ConfigError(f"graph {cfg.graph} needs num_arms")
            k = cfg.num_arms
            fam = {
                "self_loops": lambda: SelfLoopsOnly(k),
                "loopless_complete": lambda: LooplessComplete(k),
                "revealing_action": lambda: RevealingAction(k),
                "star_weak": lambda: StarWeak(k, cfg.hubs),
                "erdos_renyi": lambda: ErdosRenyiSelfAware(k, cfg.density, cfg.graph_seed),
            }[cfg.graph]()
    except GraphError as exc:
        raise ConfigError(f"cannot build graph family: {exc}") from None
    if cfg.num_arms is not None and cfg.num_arms != fam.num_nodes:
        raise ConfigError(f"num_arms={cfg.num_arms} but the graph has {fam.num_nodes} nodes")
    return fam


def build_loss_model(cfg: RunConfig, k: int) -> LossModel:
    if cfg.losses == "zero":
        return BernoulliLosses(np.zeros(k))
    if cfg.losses == "late_switch":
        switch = cfg.switch_round if cfg.switch_round is not None else (3 * cfg.horizon) // 4
        if switch < 1:
            raise ConfigError("switch_round must be at least 1")
        return LateSwitchLosses(k, switch)
    if cfg.losses == "adaptive":
        try:
            return AdaptiveTargetingLosses(k, cfg.window, cfg.safe_arm)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    if cfg.loss_means is not None:
        means = np.asarray(cfg.loss_means, dtype=float)
        if means.size != k:
            raise ConfigError(f"loss_means has {means.size} entries, graph has {k} arms")
    else:
        if not 0 <= cfg.best_arm < k:
            raise ConfigError(f"best_arm {cfg.best_arm} out of range")
        means = np.full(k, cfg.best_mean + cfg.gap)
        means[cfg.best_arm] = cfg.best_mean
    try:
        return BernoulliLosses(means)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


@dataclass(frozen=True)
class GraphTotals:
    sum_alpha: float
    sum_d: float
    sum_alpha_tilde: float
    max_alpha: int
    max_alpha_tilde: int
    source: str


def graph_totals(fam: GraphFamily, horizon: int) -> GraphTotals:
    sa, sd, st, ma, mt = fam.stats_totals(horizon)
    return GraphTotals(sa, sd, st, ma, mt, fam.stats(1).source)


def learner_params(cfg: RunConfig, totals: GraphTotals):
    """Default tuning from the graph totals, then per-field overrides."""
    over = {k: getattr(cfg, k) for k in ("eta", "gamma", "beta", "eps") if getattr(cfg, k) is not None}
    try:
        if cfg.learner == "exp3ix":
            p = exp3ix_params(totals.sum_alpha, cfg.delta)
            return Exp3IXParams(over.get("eta", p.eta), over.get("gamma", p.gamma))
        if cfg.learner == "strong":
            p = strong_params(totals.sum_alpha, cfg.delta)
            return StrongParams(over.get("eta", p.eta), over.get("gamma", p.gamma),
                                over.get("beta", p.beta))
        if cfg.learner == "weak":
            # guard the all-self-aware / all-loopless corner cases where a sum is zero
            p = weak_params(cfg.horizon, max(totals.sum_d, 1.0),
                            max(totals.sum_alpha_tilde, 1.0), cfg.delta)
            return WeakParams(over.get("eps", p.eps), over.get("gamma", p.gamma),
                              over.get("eta", p.eta))
    except ValueError as exc:
        raise ConfigError(f"bad learner parameters: {exc}") from None
    return None


def build_learner(cfg: RunConfig, k: int, params, rng: np.random.Generator):
    if cfg.learner == "exp3ix":
        return Exp3IX(k, params, rng)
    if cfg.learner == "strong":
        return StrongObsLearner(k, params, rng)
    if cfg.learner == "weak":
        return WeakObsLearner(k, params, rng)
    return DoublingWrapper(lambda sp: StrongObsLearner(k, sp, rng), cfg.delta, cfg.initial_guess)


@dataclass
class RegretTrace:
    """Raw record of one repetition; every curve is recomputable from these arrays."""

    rep: int
    actions: np.ndarray
    learner_losses: np.ndarray
    arm_losses: np.ndarray
    q: np.ndarray
    triggered: np.ndarray
    epoch: np.ndarray
    alpha: np.ndarray
    d: np.ndarray
    alpha_tilde: np.ndarray
    clamp_count: int = 0
    epoch_marks: list = field(default_factory=list)

    @property
    def horizon(self) -> int:
        return int(self.actions.size)

    @property
    def num_arms(self) -> int:
        return int(self.arm_losses.shape[1])


@dataclass(frozen=True)
class RegretCurves:
    cum_loss: np.ndarray
    regret: np.ndarray
    anytime: np.ndarray
    best_arm: int


def compute_regret(trace: RegretTrace) -> RegretCurves:
    """Cumulative regret against the arm that is best over the whole horizon.

    ``anytime`` compares against the best arm so far at each round and is a
    diagnostic only.
    """
    cum_loss = np.cumsum(trace.learner_losses)
    cum_arms = np.cumsum(trace.arm_losses, axis=0)
    best = int(np.argmin(cum_arms[-1]))
    return RegretCurves(cum_loss, cum_loss - cum_arms[:, best], cum_loss - cum_arms.min(axis=1), best)


def run_repetition(cfg: RunConfig, rep: int) -> RegretTrace:
    streams = RunStreams(cfg.master_seed, rep)
    fam = build_family(cfg)
    k = fam.num_nodes
    env = Environment(fam, build_loss_model(cfg, k), streams.substream("environment"))
    params = learner_params(cfg, graph_totals(fam, cfg.horizon))
    learner = build_learner(cfg, k, params, streams.substream("sampling"))
    informed = cfg.protocol == "informed"

    T = cfg.horizon
    actions = np.empty(T, dtype=np.int64)
    learner_losses = np.empty(T)
    arm_losses = np.empty((T, k))
    q = np.empty(T)
    triggered = np.zeros(T, dtype=bool)
    epoch = np.zeros(T, dtype=np.int64)
    alpha = np.empty(T, dtype=np.int64)
    d = np.empty(T, dtype=np.int64)
    alpha_tilde = np.empty(T, dtype=np.int64)
    clamps = 0
    for t in range(T):
        setup = env.begin_round()
        if informed and learner.informed:
            decision = learner.decide(setup.graph)
        else:
            decision = learner.decide()
        loss = env.hidden_loss
        fb = env.play(decision.action)
        rec = learner.update(setup.graph, fb)
        actions[t] = decision.action
        learner_losses[t] = loss[decision.action]
        arm_losses[t] = loss
        q[t] = rec.q
        triggered[t] = rec.triggered
        epoch[t] = rec.epoch
        clamps += rec.clamped
        s = setup.stats
        alpha[t], d[t], alpha_tilde[t] = s.alpha, s.d, s.alpha_tilde
    marks = [(m.round, m.guess) for m in learner.epoch_marks] if isinstance(learner, DoublingWrapper) else []
    return RegretTrace(rep, actions, learner_losses, arm_losses, q, triggered, epoch,
                       alpha, d, alpha_tilde, clamps, marks)


def _run_one(args):
    return run_repetition(*args)


@dataclass
class Experiment:
    config: RunConfig
    traces: list[RegretTrace]
    params: object
    totals: GraphTotals

    @property
    def bound_kind(self) -> str:
        return "weak" if self.config.learner == "weak" else "strong"


def run_experiment(cfg: RunConfig, workers: int | None = None) -> Experiment:
    """Run every repetition; output is independent of ``workers``."""
    workers = cfg.workers if workers is None else workers
    jobs = [(cfg, rep) for rep in range(cfg.repetitions)]
    fam = build_family(cfg)
    totals = graph_totals(fam, cfg.horizon)
    params = learner_params(cfg, totals)
    build_loss_model(cfg, fam.num_nodes)
    if workers == 1 or len(jobs) == 1:
        traces = [_run_one(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            traces = list(pool.map(_run_one, jobs))
    return Experiment(cfg, traces, params, totals)


def nearest_rank(values: Sequence[float], q: float, axis: int = 0) -> np.ndarray:
    """Empirical ``q``-quantile by nearest rank: the ``ceil(q n)``-th smallest value."""
    if not 0.0 < q < 1.0:
        raise ValueError(f"quantile level must lie in (0, 1), got {q}")
    arr = np.asarray(values, dtype=float)
    n = arr.shape[axis]
    if n == 0:
        raise ValueError("no values to aggregate")
    rank = max(1, math.ceil(q * n - 1e-12))
    return np.take(np.sort(arr, axis=axis), rank - 1, axis=axis)


def regret_matrix(traces: Sequence[RegretTrace]) -> np.ndarray:
    if not traces:
        raise ValueError("no traces")
    lengths = {t.horizon for t in traces}
    if len(lengths) != 1:
        raise ValueError(f"traces differ in length: {sorted(lengths)}")
    return np.stack([compute_regret(t).regret for t in traces])


def aggregate_quantiles(traces: Sequence[RegretTrace], q: float) -> np.ndarray:
    """Per-round nearest-rank ``q``-quantile of cumulative regret across repetitions."""
    return nearest_rank(regret_matrix(traces), q, axis=0)


def strong_bound(sum_alpha: float, max_alpha: float, delta: float) -> float:
    """``sqrt(sum alpha ln(1/delta)) + max alpha ln(1/delta)``, log factors in K and T dropped."""
    ld = math.log(1.0 / delta)
    return math.sqrt(sum_alpha * ld) + max_alpha * ld


def weak_bound(horizon: int, sum_d: float, sum_alpha_tilde: float, max_alpha_tilde: float,
               delta: float) -> float:
    ld = math.log(1.0 / delta)
    return ((horizon * sum_d * ld) ** (1.0 / 3.0) + sum_d * ld / horizon
            + math.sqrt(sum_alpha_tilde * ld) + max_alpha_tilde * ld)


def trace_bound(trace: RegretTrace, delta: float, kind: str) -> float:
    for name in ("alpha", "d", "alpha_tilde"):
        arr = getattr(trace, name, None)
        if arr is None or len(arr) != trace.horizon:
            raise ValueError(f"trace {trace.rep} is missing per-round {name}")
    if kind == "strong":
        return strong_bound(float(trace.alpha.sum()), float(trace.alpha.max()), delta)
    if kind == "weak":
        return weak_bound(trace.horizon, float(trace.d.sum()), float(trace.alpha_tilde.sum()),
                          float(trace.alpha_tilde.max()), delta)
    raise ValueError(f"unknown bound kind {kind!r}")


def bound_ratio(traces: Sequence[RegretTrace], delta: float, kind: str = "strong") -> float:
    """Empirical ``(1 - delta)``-quantile of final regret over the matching regret bound.

    Uses the smallest per-repetition bound, so the ratio is never flattered
    by a lucky repetition.
    """
    finals = regret_matrix(traces)[:, -1]
    top = float(nearest_rank(finals, 1.0 - delta))
    bound = min(trace_bound(t, delta, kind) for t in traces)
    return top / bound


def summarize(exp: Experiment) -> dict:
    cfg = exp.config
    finals = regret_matrix(exp.traces)[:, -1]
    levels = sorted({0.5, 0.9, round(1.0 - cfg.delta, 12)})
    kind = exp.bound_kind
    out = {
        "rng": ALGORITHM_ID,
        "config": {k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(cfg).items()},
        "params": asdict(exp.params) if exp.params is not None else None,
        "graph_totals": asdict(exp.totals),
        "final_regret_quantiles": {repr(q): float(nearest_rank(finals, q)) for q in levels},
        "bound_kind": kind,
        "bound": min(trace_bound(t, cfg.delta, kind) for t in exp.traces),
        "bound_ratio": bound_ratio(exp.traces, cfg.delta, kind),
        "bias_trigger_rounds": [int(t.triggered.sum()) for t in exp.traces],
        "clamped_rounds": [int(t.clamp_count) for t in exp.traces],
        "epochs": [t.epoch_marks for t in exp.traces] if cfg.learner == "strong+doubling" else None,
    }
    return out
