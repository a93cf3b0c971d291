"""Diversity exposure maximization."""

from ._divexp import (
    AssumptionError,
    ConfigError,
    ConstraintSet,
    Error,
    ItemCatalog,
    ParseError,
    PropagationModel,
    RcSample,
    ResourceError,
    SocialGraph,
    ValidationError,
    baseline_close,
    baseline_far,
    baseline_weight,
    diversity_level,
    exact_greedy,
    exact_score,
    generate_synthetic,
    lambda_bound,
    log_binom,
    make_items,
    mc_score,
    rc_greedy,
    run_experiment,
    tdem,
)

__version__ = "0.1.0"
