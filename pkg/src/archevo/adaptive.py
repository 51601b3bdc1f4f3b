"""Adaptive guidance learned during the search.

Two small pieces of state steer the exploitation phase: a per-gene table
of value scores that shapes mutation distributions, and per-subproblem
utilities that shape how often each subproblem receives a new candidate.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .genome import FIELD_DOMAINS, FIELD_NAMES, Genome
from .objectives import ObjectiveConfig, ese_max


@dataclass
class ValueScoreTable:
    """Accumulated evidence for how well each gene value performs.

    For every trained candidate each of its gene values receives the score
    ese_max - ese (bigger is better).  The mean score per value feeds the
    mutation distribution: values that produced better candidates are
    proposed more often.
    """

    sums: dict[str, list[float]] = field(
        default_factory=lambda: {
            name: [0.0] * len(FIELD_DOMAINS[name]) for name in FIELD_NAMES
        }
    )
    counts: dict[str, list[int]] = field(
        default_factory=lambda: {
            name: [0] * len(FIELD_DOMAINS[name]) for name in FIELD_NAMES
        }
    )

    def record_trained(self, genome: Genome, ese_value: float, config: ObjectiveConfig) -> None:
        bound = ese_max(config)
        if not (0.0 <= ese_value <= bound):
            raise ValueError(f"ese {ese_value} outside [0, {bound}]")
        score = bound - ese_value
        for name in FIELD_NAMES:
            j = FIELD_DOMAINS[name].index(getattr(genome, name))
            self.sums[name][j] += score
            self.counts[name][j] += 1

    def mean_scores(self, name: str) -> list[float]:
        """Mean score per value; values never used score 0."""
        return [
            s / c if c else 0.0
            for s, c in zip(self.sums[name], self.counts[name])
        ]

    def mutation_probs(self, name: str, epsilon: float) -> list[float]:
        """Mutation distribution over one gene's values.

        Mean scores are normalized to shares, floored by epsilon, and
        renormalized.  With no evidence at all the distribution is
        uniform.
        """
        means = self.mean_scores(name)
        total = sum(means)
        k = len(means)
        if total == 0.0:
            shares = [epsilon] * k if epsilon > 0 else [1.0 / k] * k
        else:
            shares = [m / total + epsilon for m in means]
        z = sum(shares)
        return [s / z for s in shares]

    def snapshot(self) -> dict:
        return {
            "sums": {name: list(v) for name, v in self.sums.items()},
            "counts": {name: list(v) for name, v in self.counts.items()},
        }

    @classmethod
    def restore(cls, data: dict) -> "ValueScoreTable":
        table = cls()
        for name in FIELD_NAMES:
            table.sums[name] = [float(x) for x in data["sums"][name]]
            table.counts[name] = [int(x) for x in data["counts"][name]]
        return table


@dataclass
class SubproblemUtilities:
    """Decayed credit for subproblems whose candidates keep paying off."""

    n: int
    values: list[float] = field(init=False)

    def __post_init__(self) -> None:
        self.values = [0.0] * self.n

    def selection_probs(self, epsilon: float) -> list[float]:
        shifted = [u + epsilon for u in self.values]
        z = sum(shifted)
        if z == 0.0:
            return [1.0 / self.n] * self.n
        return [s / z for s in shifted]

    def decay_and_credit(self, contributed: set[int], gamma: float) -> None:
        """End-of-generation update: decay everything, credit contributors.

        A subproblem contributed if a candidate generated for it this
        generation entered the archive or replaced at least one
        neighborhood solution.
        """
        for i in range(self.n):
            self.values[i] = gamma * self.values[i] + (1.0 if i in contributed else 0.0)

    def snapshot(self) -> list[float]:
        return list(self.values)

    @classmethod
    def restore(cls, data: list) -> "SubproblemUtilities":
        utilities = cls(len(data))
        utilities.values = [float(x) for x in data]
        return utilities
