"""Decomposition bookkeeping for the two-objective search.

The biobjective problem is split into N scalar subproblems with evenly
spaced weight vectors.  Each subproblem keeps its current best solution
under the penalty-based boundary intersection (PBI) value of adaptively
normalized objectives; an unbounded archive keeps every non-dominated
evaluation seen so far.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from .evaluators import EvaluationRecord

NORMALIZATION_DELTA = 1e-12


def init_weights(n: int) -> list[tuple[float, float]]:
    """N evenly spaced weight vectors (i/(N-1), 1 - i/(N-1))."""
    if n < 2:
        raise ValueError("need at least two subproblems")
    return [(i / (n - 1), 1.0 - i / (n - 1)) for i in range(n)]


def neighborhoods(weights: Sequence[tuple[float, float]], t: int) -> list[tuple[int, ...]]:
    """For each weight vector, the indices of its t nearest weights.

    Every vector is its own nearest neighbour, so it always appears in its
    own neighborhood.  Distance ties break toward the lower index, which
    keeps the result deterministic.
    """
    n = len(weights)
    if not (2 <= t <= n):
        raise ValueError("neighborhood size must be in [2, n]")
    result = []
    for i, wi in enumerate(weights):
        by_distance = sorted(
            range(n),
            key=lambda k: (
                (wi[0] - weights[k][0]) ** 2 + (wi[1] - weights[k][1]) ** 2,
                k,
            ),
        )
        result.append(tuple(by_distance[:t]))
    return result


def dominates(a: Sequence[float], b: Sequence[float]) -> bool:
    """Pareto dominance for minimization: a <= b everywhere, < somewhere."""
    return a[0] <= b[0] and a[1] <= b[1] and (a[0] < b[0] or a[1] < b[1])


def pbi(
    objectives: Sequence[float],
    weight: Sequence[float],
    z_ideal: Sequence[float],
    z_nadir: Sequence[float],
    theta: float,
) -> float:
    """Penalty-based boundary intersection of adaptively normalized objectives.

    Objectives are rescaled to (f - z*) / (z_nad - z* + delta) before the
    projection, so subproblems stay comparable as the observed ranges
    drift.  d1 is the length of the projection onto the weight direction,
    d2 the distance to that direction; the value is d1 + theta * d2.
    """
    g0 = (objectives[0] - z_ideal[0]) / (z_nadir[0] - z_ideal[0] + NORMALIZATION_DELTA)
    g1 = (objectives[1] - z_ideal[1]) / (z_nadir[1] - z_ideal[1] + NORMALIZATION_DELTA)
    norm = math.sqrt(weight[0] ** 2 + weight[1] ** 2)
    d1 = abs(g0 * weight[0] + g1 * weight[1]) / norm
    r0 = g0 - d1 * weight[0] / norm
    r1 = g1 - d1 * weight[1] / norm
    d2 = math.sqrt(r0 * r0 + r1 * r1)
    return d1 + theta * d2


@dataclass
class Subproblem:
    index: int
    weight: tuple[float, float]
    neighbors: tuple[int, ...]
    current: EvaluationRecord | None = None


@dataclass
class DecompositionState:
    """Weights, neighborhoods, reference points, current solutions, archive."""

    n: int
    t: int
    theta: float
    subproblems: list[Subproblem] = field(init=False)
    z_ideal: list[float] | None = field(init=False, default=None)
    z_nadir: list[float] | None = field(init=False, default=None)
    archive: list[EvaluationRecord] = field(init=False, default_factory=list)

    def __post_init__(self) -> None:
        weights = init_weights(self.n)
        hoods = neighborhoods(weights, self.t)
        self.subproblems = [
            Subproblem(i, weights[i], hoods[i]) for i in range(self.n)
        ]

    # -- reference points ---------------------------------------------------

    def observe(self, objectives: Sequence[float]) -> None:
        """Fold one evaluated objective vector into z* and z_nad."""
        if self.z_ideal is None:
            self.z_ideal = [objectives[0], objectives[1]]
            self.z_nadir = [objectives[0], objectives[1]]
            return
        assert self.z_nadir is not None
        for k in range(2):
            if objectives[k] < self.z_ideal[k]:
                self.z_ideal[k] = objectives[k]
            if objectives[k] > self.z_nadir[k]:
                self.z_nadir[k] = objectives[k]

    def pbi_of(self, objectives: Sequence[float], index: int) -> float:
        if self.z_ideal is None or self.z_nadir is None:
            raise RuntimeError("no evaluations observed yet")
        return pbi(
            objectives,
            self.subproblems[index].weight,
            self.z_ideal,
            self.z_nadir,
            self.theta,
        )

    # -- current solutions --------------------------------------------------

    def assign_initial(self, records: Sequence[EvaluationRecord]) -> None:
        """Give every subproblem the record minimizing its PBI value.

        All records must already have been observe()d.  Ties break toward
        the earliest record, and one record may seed several subproblems.
        """
        if not records:
            raise ValueError("cannot initialize from zero records")
        for sub in self.subproblems:
            best = min(
                range(len(records)),
                key=lambda r: (self.pbi_of(records[r].objectives.as_tuple(), sub.index), r),
            )
            sub.current = records[best]

    def update_pns(self, record: EvaluationRecord, origin: int) -> int:
        """Offer a record to the origin subproblem's neighborhood.

        Each neighbor adopts the record if it strictly improves (lowers)
        that neighbor's PBI value under the current reference points.
        Returns how many neighbors switched.
        """
        objectives = record.objectives.as_tuple()
        replaced = 0
        for k in self.subproblems[origin].neighbors:
            sub = self.subproblems[k]
            assert sub.current is not None
            if self.pbi_of(objectives, k) < self.pbi_of(sub.current.objectives.as_tuple(), k):
                sub.current = record
                replaced += 1
        return replaced

    def would_replace_any(self, objectives: Sequence[float]) -> bool:
        """True iff the point strictly lowers at least one subproblem's PBI.

        Screens against every current solution, not just a neighborhood:
        a candidate is worth the training cost whenever any entry of the
        population of neighboring solutions would adopt it.
        """
        for sub in self.subproblems:
            assert sub.current is not None
            if self.pbi_of(objectives, sub.index) < self.pbi_of(
                sub.current.objectives.as_tuple(), sub.index
            ):
                return True
        return False

    # -- non-dominated archive ----------------------------------------------

    def nondominated_vs_archive(self, objectives: Sequence[float]) -> bool:
        """True iff no archive member dominates or exactly equals the point."""
        for member in self.archive:
            existing = member.objectives.as_tuple()
            if dominates(existing, objectives) or existing == tuple(objectives):
                return False
        return True

    def update_archive(self, record: EvaluationRecord) -> bool:
        """Insert a record if non-dominated; evict members it dominates.

        Duplicates of an archived objective vector are not re-inserted.
        Returns whether the record entered.
        """
        objectives = record.objectives.as_tuple()
        if not self.nondominated_vs_archive(objectives):
            return False
        self.archive = [
            member
            for member in self.archive
            if not dominates(objectives, member.objectives.as_tuple())
        ]
        self.archive.append(record)
        return True
