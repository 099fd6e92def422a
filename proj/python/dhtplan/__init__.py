"""Sampling plans for Bernoulli hypothesis tests, run limits, fuzzy method
selection and sequential multi-level lot inspection."""

from ._core import (
    Applicability,
    DegenerateSpecError,
    DomainError,
    Error,
    ErrorEstimate,
    Event,
    FuzzyRuleBase,
    Inference,
    InspectionState,
    LadderError,
    LevelLadder,
    NoConvergenceError,
    NoRecommendationError,
    ParseError,
    RateEstimate,
    RuleFiring,
    SamplingPlan,
    SflResult,
    SolverError,
    StateMachineError,
    accept_probability,
    build_ladder,
    classify,
    closed_form,
    mean_recurrence,
    monte_carlo_accept,
    oc_curve,
    probability_grid,
    realized_errors,
    replay,
    run_stream,
    select,
    sfl_r,
    solve,
)

__all__ = [name for name in dir() if not name.startswith("_")]
