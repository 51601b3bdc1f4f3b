"""Front quality metrics and the exhaustive front oracle.

Everything here works on biobjective minimization points (f1, f2).  The
sweep-based non-dominated filter is the production implementation; the
quadratic pairwise filter exists so the two can be cross-checked against
each other on arbitrary inputs.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .genome import FIELD_NAMES, Genome, enumerate_space
from .objectives import ObjectiveConfig, objectives_for


def nondominated_indices(points: Sequence[Sequence[float]]) -> list[int]:
    """Indices of non-dominated points via an O(n log n) sweep.

    Ties: points with identical objective vectors do not dominate each
    other, so duplicates of a front point are all kept.  The returned
    indices are sorted ascending.
    """
    n = len(points)
    if n == 0:
        return []
    order = sorted(range(n), key=lambda i: (points[i][0], points[i][1], i))
    keep: list[int] = []
    best_f2 = math.inf
    pos = 0
    while pos < n:
        f1 = points[order[pos]][0]
        group_end = pos
        while group_end < n and points[order[group_end]][0] == f1:
            group_end += 1
        group_min_f2 = points[order[pos]][1]  # sorted, so first is smallest
        if group_min_f2 < best_f2:
            for k in range(pos, group_end):
                if points[order[k]][1] == group_min_f2:
                    keep.append(order[k])
                else:
                    break
            best_f2 = group_min_f2
        pos = group_end
    keep.sort()
    return keep


def pairwise_nondominated_indices(points: Sequence[Sequence[float]]) -> list[int]:
    """Quadratic reference filter: keep i iff no j dominates i."""
    arr = np.asarray(points, dtype=np.float64)
    n = arr.shape[0]
    keep = []
    for i in range(n):
        leq = (arr <= arr[i]).all(axis=1)
        lt = (arr < arr[i]).any(axis=1)
        if not np.any(leq & lt):
            keep.append(i)
    return keep


def hypervolume(points: Sequence[Sequence[float]], reference: Sequence[float]) -> float:
    """Area dominated by the points and bounded by the reference point.

    Every point must strictly dominate the reference in both objectives;
    dominated and duplicate points are filtered out before the sweep.
    """
    if not points:
        return 0.0
    rx, ry = float(reference[0]), float(reference[1])
    for p in points:
        if not (math.isfinite(p[0]) and math.isfinite(p[1])):
            raise ValueError(f"non-finite point {tuple(p)}")
        if not (p[0] < rx and p[1] < ry):
            raise ValueError(
                f"point {tuple(p)} does not strictly dominate the reference {(rx, ry)}"
            )
    front = sorted({(points[i][0], points[i][1]) for i in nondominated_indices(points)})
    total = 0.0
    for k, (x, y) in enumerate(front):
        next_x = front[k + 1][0] if k + 1 < len(front) else rx
        total += (next_x - x) * (ry - y)
    return total


def igd(
    front: Sequence[Sequence[float]], reference_front: Sequence[Sequence[float]]
) -> float:
    """Inverted generational distance, normalized by reference ranges.

    For every reference point, the distance to the nearest point of the
    candidate front, averaged; coordinates are first rescaled by the
    reference front's per-objective ranges so the two objectives weigh
    equally.  Zero iff the candidate front covers every reference point.
    """
    if not front or not reference_front:
        raise ValueError("igd needs non-empty fronts")
    ref = np.asarray(reference_front, dtype=np.float64)
    cand = np.asarray(front, dtype=np.float64)
    spans = ref.max(axis=0) - ref.min(axis=0)
    spans[spans == 0.0] = 1.0
    ref_scaled = ref / spans
    cand_scaled = cand / spans
    d = np.sqrt(
        ((ref_scaled[:, None, :] - cand_scaled[None, :, :]) ** 2).sum(axis=2)
    )
    return float(d.min(axis=1).mean())


@dataclass(frozen=True)
class FrontSummary:
    """A non-dominated front with its quality numbers.

    igd is measured against the front this one is compared to; for an
    exhaustively enumerated front that is itself, so it defaults to 0.
    """

    points: tuple[tuple[float, float], ...]
    representatives: tuple[Genome, ...]
    reference_point: tuple[float, float]
    hypervolume: float
    enumerated: int
    igd: float = 0.0

    def to_json_dict(self) -> dict:
        return {
            "points": [list(p) for p in self.points],
            "reference_point": list(self.reference_point),
            "hypervolume": self.hypervolume,
            "igd": self.igd,
            "size": len(self.points),
            "enumerated": self.enumerated,
        }


def true_front(
    evaluator,
    config: ObjectiveConfig,
    restriction: Mapping[str, Sequence] | None = None,
    genomes: Iterable[Genome] | None = None,
) -> FrontSummary:
    """Exhaustive front oracle.

    Evaluates every genome (the whole space, a restriction of it, or an
    explicit iterable), filters the objective vectors, and reports the
    front with a hypervolume against the canonical reference point: the
    componentwise maximum over everything enumerated, times 1.1.

    One representative genome is kept per distinct front point, the first
    in enumeration order.
    """
    source = list(genomes) if genomes is not None else None
    if source is None:
        iterator: Iterable[Genome] = enumerate_space(restriction)
    else:
        iterator = source
    points: list[tuple[float, float]] = []
    all_genomes: list[Genome] | None = [] if source is None else None
    max_f1 = -math.inf
    max_f2 = -math.inf
    for genome in iterator:
        metrics = evaluator.evaluate(genome, config)
        vec = objectives_for(genome, metrics, config)
        points.append((vec.f1, vec.f2))
        if vec.f1 > max_f1:
            max_f1 = vec.f1
        if vec.f2 > max_f2:
            max_f2 = vec.f2
        if all_genomes is not None:
            all_genomes.append(genome)
    if not points:
        raise ValueError("nothing to enumerate")
    front_idx = nondominated_indices(points)
    genome_list = all_genomes if all_genomes is not None else source
    assert genome_list is not None
    seen: set[tuple[float, float]] = set()
    front_points: list[tuple[float, float]] = []
    reps: list[Genome] = []
    for i in front_idx:
        if points[i] in seen:
            continue
        seen.add(points[i])
        front_points.append(points[i])
        reps.append(genome_list[i])
    paired = sorted(zip(front_points, reps), key=lambda pr: pr[0])
    front_points = [p for p, _ in paired]
    reps = [r for _, r in paired]
    reference = (1.1 * max_f1, 1.1 * max_f2)
    hv = hypervolume(front_points, reference)
    return FrontSummary(
        points=tuple(front_points),
        representatives=tuple(reps),
        reference_point=reference,
        hypervolume=hv,
        enumerated=len(points),
    )


def write_front_csv(path: str | Path, summary: FrontSummary) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([*FIELD_NAMES, "f1", "f2"])
        for genome, point in zip(summary.representatives, summary.points):
            writer.writerow([*genome.values(), repr(point[0]), repr(point[1])])
