"""Objective functions: expected segmentation error and model size.

f1 is the expected segmentation error (ese), a weighted gap between the
class count and the multi-class Dice scores plus an early-stopping bonus.
f2 is the natural log of the trainable-parameter count.  Both are
minimized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .genome import Genome, count_params, decode


class MetricRangeError(ValueError):
    """A training metric fell outside its admissible range."""


@dataclass(frozen=True)
class ObjectiveConfig:
    alpha: float = 0.25
    beta: float = 0.10
    num_classes: int = 4
    total_epochs: int = 60

    def __post_init__(self) -> None:
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("alpha and beta must be non-negative")
        if self.num_classes < 2:
            raise ValueError("num_classes must be at least 2")
        if self.total_epochs < 1:
            raise ValueError("total_epochs must be at least 1")


@dataclass(frozen=True)
class TrainingMetrics:
    """What an evaluator reports back for one trained candidate."""

    mc_dice_train: float
    mc_dice_val: float
    e_max: int
    total_epochs: int

    def validate(self, config: ObjectiveConfig) -> None:
        c = config.num_classes
        if not (0.0 <= self.mc_dice_train <= c):
            raise MetricRangeError(f"mc_dice_train {self.mc_dice_train} outside [0, {c}]")
        if not (0.0 <= self.mc_dice_val <= c):
            raise MetricRangeError(f"mc_dice_val {self.mc_dice_val} outside [0, {c}]")
        if not (1 <= self.e_max <= self.total_epochs):
            raise MetricRangeError(
                f"e_max {self.e_max} outside [1, {self.total_epochs}]"
            )
        if self.total_epochs != config.total_epochs:
            raise MetricRangeError(
                f"metrics report {self.total_epochs} total epochs, config says {config.total_epochs}"
            )


@dataclass(frozen=True)
class ObjectiveVector:
    f1: float
    f2: float

    def as_tuple(self) -> tuple[float, float]:
        return (self.f1, self.f2)


def ese(metrics: TrainingMetrics, config: ObjectiveConfig) -> float:
    """Expected segmentation error.

    alpha * (C - mc_dice_train) + (C - mc_dice_val)
        + beta * (E - e_max) / E

    Lower is better; a perfect model stopping at the last epoch scores 0.
    """
    metrics.validate(config)
    c = config.num_classes
    e = config.total_epochs
    return (
        config.alpha * (c - metrics.mc_dice_train)
        + (c - metrics.mc_dice_val)
        + config.beta * (e - metrics.e_max) / e
    )


def ese_max(config: ObjectiveConfig) -> float:
    """Normalizing bound on ese: (alpha + 1) * C + beta.

    Sits just above the attainable supremum (e_max is at least 1, so the
    beta term never quite reaches beta), which keeps ese_max - ese
    strictly positive for every valid evaluation.
    """
    return (config.alpha + 1.0) * config.num_classes + config.beta


def size_objective(param_count: int) -> float:
    """f2: natural log of the trainable-parameter count."""
    if param_count < 1:
        raise ValueError("param_count must be positive")
    return math.log(param_count)


def objectives_for(
    genome: Genome, metrics: TrainingMetrics, config: ObjectiveConfig
) -> ObjectiveVector:
    """Assemble the objective vector for one evaluated genome."""
    f1 = ese(metrics, config)
    f2 = size_objective(count_params(decode(genome), config.num_classes))
    return ObjectiveVector(f1, f2)
