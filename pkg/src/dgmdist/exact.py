"""Exact 1-Wasserstein distance via assignment on projection-augmented sets.

Each diagram's points (expanded by multiplicity) face the other diagram's
points plus one diagonal slot per opposite point; diagonal-to-diagonal mass
moves for free. The minimum-cost perfect matching of that square problem is
the exact distance. A brute-force enumerator over all augmented matchings
serves as an independent oracle for tiny instances, and an unmodified
optimal-transport variant between the augmented sets is provided for
verification.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .diagram import GroundMetric, PersistenceDiagram

DEFAULT_SIZE_CAP = 4000


class SizeCapError(ValueError):
    """Instance too large for the exact solver; use an approximation."""


@dataclass
class AssignmentProblem:
    """Square assignment instance; rows/cols are points then diagonal slots."""

    size: int
    cost: np.ndarray


def _expanded(diagram: PersistenceDiagram) -> np.ndarray:
    """Points repeated by multiplicity, as an (n, 2) array."""
    if len(diagram) == 0:
        return np.zeros((0, 2))
    return np.repeat(diagram.coords(), diagram.multiplicities(), axis=0)


def _diagonal_distances(points: np.ndarray, metric: GroundMetric) -> np.ndarray:
    return np.abs(points[:, 1] - points[:, 0]) * metric.diagonal_factor


def build_assignment(
    first: PersistenceDiagram,
    second: PersistenceDiagram,
    metric: GroundMetric,
    size_cap: int = DEFAULT_SIZE_CAP,
) -> AssignmentProblem:
    """Cost matrix of the projection-augmented assignment problem.

    Rows: expanded first-diagram points, then one diagonal slot per expanded
    second-diagram point. Columns: the mirror image. Point-to-diagonal cost
    is the point's own diagonal distance; diagonal-to-diagonal is zero.
    """
    m = first.total_count
    n = second.total_count
    if m + n > size_cap:
        raise SizeCapError(
            f"expanded instance size {m + n} exceeds cap {size_cap}"
        )
    p = _expanded(first)
    q = _expanded(second)
    cost = np.zeros((m + n, m + n))
    if m and n:
        cost[:m, :n] = metric.pairwise(p, q)
    if m:
        cost[:m, n:] = _diagonal_distances(p, metric)[:, None]
    if n:
        cost[m:, :n] = _diagonal_distances(q, metric)[None, :]
    return AssignmentProblem(size=m + n, cost=cost)


def exact_distance(
    first: PersistenceDiagram,
    second: PersistenceDiagram,
    metric: GroundMetric,
    size_cap: int = DEFAULT_SIZE_CAP,
) -> float:
    """Exact 1-Wasserstein distance (minimum over augmented matchings)."""
    problem = build_assignment(first, second, metric, size_cap)
    if problem.size == 0:
        return 0.0
    rows, cols = linear_sum_assignment(problem.cost)
    return float(problem.cost[rows, cols].sum())


def brute_force_distance(
    first: PersistenceDiagram,
    second: PersistenceDiagram,
    metric: GroundMetric,
    max_units: int = 8,
) -> float:
    """Minimum cost over all augmented matchings, by direct enumeration.

    Each first-diagram unit goes to an unused second-diagram unit or to its
    own projection; leftover second-diagram units go to their projections.
    Intentionally independent of the assignment solver.
    """
    p = _expanded(first)
    q = _expanded(second)
    if len(p) + len(q) > max_units:
        raise SizeCapError(
            f"expanded instance size {len(p) + len(q)} exceeds brute-force bound {max_units}"
        )
    p_diag = _diagonal_distances(p, metric) if len(p) else np.zeros(0)
    q_diag = _diagonal_distances(q, metric) if len(q) else np.zeros(0)
    cross = metric.pairwise(p, q)

    best = math.inf

    def explore(i: int, used: int, acc: float) -> None:
        nonlocal best
        if acc >= best:
            return
        if i == len(p):
            total = acc
            for j in range(len(q)):
                if not used & (1 << j):
                    total += q_diag[j]
            if total < best:
                best = total
            return
        explore(i + 1, used, acc + p_diag[i])
        for j in range(len(q)):
            if not used & (1 << j):
                explore(i + 1, used | (1 << j), acc + cross[i, j])

    explore(0, 0, 0.0)
    return float(best)


def ot_augmented(
    first: PersistenceDiagram,
    second: PersistenceDiagram,
    metric: GroundMetric,
    size_cap: int = DEFAULT_SIZE_CAP,
) -> float:
    """Optimal transport between the projection-augmented multisets under the
    unmodified ground metric (diagonal-to-diagonal pays its true distance).

    Both augmented sets carry the same total mass, so with unit expansion the
    transport reduces to an assignment.
    """
    m = first.total_count
    n = second.total_count
    if m + n > size_cap:
        raise SizeCapError(
            f"expanded instance size {m + n} exceeds cap {size_cap}"
        )
    if m + n == 0:
        return 0.0
    p = _expanded(first)
    q = _expanded(second)

    def project(points: np.ndarray) -> np.ndarray:
        mid = 0.5 * (points[:, 0] + points[:, 1])
        return np.stack([mid, mid], axis=1)

    first_aug = np.vstack([p, project(q)]) if n else p
    second_aug = np.vstack([q, project(p)]) if m else q
    cost = metric.pairwise(first_aug, second_aug)
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].sum())
