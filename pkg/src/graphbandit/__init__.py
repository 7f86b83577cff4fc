"""High-probability bandit learners for time-varying feedback graphs."""

from .environments import (
    AdaptiveTargetingLosses,
    BernoulliLosses,
    Environment,
    ErdosRenyiSelfAware,
    GraphSequence,
    LateSwitchLosses,
    LooplessComplete,
    RevealingAction,
    SelfLoopsOnly,
    StarWeak,
    UnionOfCliques,
    generate_graph,
)
from .errors import ConfigError, ProtocolViolation
from .estimation import RoundFeedback, build_bias, build_ix_estimator, estimator_expectation_oracle
from .graph import (
    FeedbackGraph,
    GraphError,
    Observability,
    classify,
    greedy_weak_dominating_set,
    independence_number_exact,
    ix_quantity,
    observation_probability,
    parse_graph,
    self_loop_set,
    weak_domination_number_exact,
)
from .harness import (
    RegretTrace,
    RunConfig,
    aggregate_quantiles,
    bound_ratio,
    compute_regret,
    run_experiment,
    run_repetition,
)
from .learners import (
    DoublingWrapper,
    Exp3IX,
    StrongObsLearner,
    WeakObsLearner,
    exp3ix_round,
    strong_obs_round,
    strong_params,
    weak_obs_round,
    weak_params,
)
from .output import emit_csv, emit_svg_plot
from .simplex import dominating_mix, entropy_omd_step, sample, uniform_mix

__version__ = "0.1.0"
