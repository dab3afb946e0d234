"""Accident-probability modeling from vehicle trajectories.

Thin Python layer over the C++ core: friction, safety scores, nested-logit
probabilities and choice-based sampling weights.
"""

from ._core import (
    FeatureVector,
    FrictionConfig,
    ModelParameters,
    NumericError,
    Outcome,
    SamplingWeights,
    ScalingConfig,
    ScoreVector,
    Surface,
    ValidationError,
    VehicleType,
    aggregate_cell,
    load_model,
    mu_long,
    nl_probabilities,
    sampling_weights,
    scale_features,
    score_observation,
)

__all__ = [
    "FeatureVector",
    "FrictionConfig",
    "ModelParameters",
    "NumericError",
    "Outcome",
    "SamplingWeights",
    "ScalingConfig",
    "ScoreVector",
    "Surface",
    "ValidationError",
    "VehicleType",
    "aggregate_cell",
    "load_model",
    "mu_long",
    "nl_probabilities",
    "sampling_weights",
    "scale_features",
    "score_observation",
]
