"""Drone and mobile-charger scheduling with latent hybrid-action reinforcement learning."""

from ._core import (
    ContractViolation,
    Env,
    GenerationError,
    ParseError,
    TrainingError,
    evaluate,
    generate_deployment,
    greedy,
    state_dim,
    train,
)

__all__ = [
    "ContractViolation",
    "Env",
    "GenerationError",
    "ParseError",
    "TrainingError",
    "evaluate",
    "generate_deployment",
    "greedy",
    "state_dim",
    "train",
]
