"""Persistence diagram data model, diagonal geometry, file I/O and synthetic generators.

A diagram is an immutable multiset of (birth, death) points strictly above the
line y = x. Duplicate points are merged into integer multiplicities at
construction, and every downstream algorithm works on multiplicities rather
than expanded copies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np
from scipy.spatial.distance import cdist


class DiagramError(ValueError):
    """Base class for diagram construction and parsing failures."""


class InvalidPointError(DiagramError):
    """A point violates death > birth, finiteness, or multiplicity >= 1."""


class DiagramParseError(DiagramError):
    """A diagram file line does not match the expected grammar."""


class GroundMetric(Enum):
    """Inner norm used for point-to-point costs: L1, L2 or L-infinity."""

    L1 = "l1"
    L2 = "l2"
    LINF = "linf"

    @property
    def q(self) -> float:
        """Norm exponent: 1.0, 2.0 or math.inf (usable as Minkowski p)."""
        return _METRIC_Q[self.value]

    @property
    def diagonal_factor(self) -> float:
        """Distance from a point to its diagonal projection per unit lifetime."""
        return _DIAG_FACTOR[self.value]

    def distance(self, a: tuple[float, float], b: tuple[float, float]) -> float:
        dx = abs(a[0] - b[0])
        dy = abs(a[1] - b[1])
        if self is GroundMetric.L1:
            return dx + dy
        if self is GroundMetric.L2:
            return math.hypot(dx, dy)
        return dx if dx > dy else dy

    def pairwise(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Distance matrix between two (n, 2) coordinate arrays."""
        if a.size == 0 or b.size == 0:
            return np.zeros((len(a), len(b)))
        return cdist(a, b, metric=_CDIST_NAME[self.value])


_METRIC_Q = {"l1": 1.0, "l2": 2.0, "linf": math.inf}
_DIAG_FACTOR = {"l1": 1.0, "l2": 2.0 ** -0.5, "linf": 0.5}
_CDIST_NAME = {"l1": "cityblock", "l2": "euclidean", "linf": "chebyshev"}


@dataclass(frozen=True)
class PDPoint:
    """A persistence point: birth < death, with an integer multiplicity."""

    birth: float
    death: float
    multiplicity: int = 1

    def __post_init__(self):
        object.__setattr__(self, "birth", float(self.birth))
        object.__setattr__(self, "death", float(self.death))
        object.__setattr__(self, "multiplicity", int(self.multiplicity))
        if not (math.isfinite(self.birth) and math.isfinite(self.death)):
            raise InvalidPointError(
                f"non-finite coordinates ({self.birth}, {self.death})"
            )
        if self.death <= self.birth:
            raise InvalidPointError(
                f"death <= birth for point ({self.birth}, {self.death})"
            )
        if self.multiplicity < 1:
            raise InvalidPointError(f"multiplicity must be >= 1, got {self.multiplicity}")

    @property
    def lifetime(self) -> float:
        return self.death - self.birth


def project_to_diagonal(p: PDPoint) -> tuple[float, float]:
    """Nearest point on the line y = x: ((birth+death)/2, (birth+death)/2)."""
    mid = 0.5 * (p.birth + p.death)
    return (mid, mid)


def diagonal_distance(p: PDPoint, metric: GroundMetric) -> float:
    """Cost of matching a point to its own diagonal projection."""
    return p.lifetime * metric.diagonal_factor


class PersistenceDiagram:
    """Immutable, canonically sorted multiset of persistence points.

    Points are kept sorted lexicographically by (birth, death) and duplicates
    are merged into multiplicities, so two diagrams describing the same
    multiset compare equal regardless of input order.
    """

    __slots__ = ("_points", "_coords", "_mults", "_total")

    def __init__(self, points: Iterable = ()):
        merged: dict[tuple[float, float], int] = {}
        for item in points:
            pt = item if isinstance(item, PDPoint) else PDPoint(*item)
            key = (pt.birth, pt.death)
            merged[key] = merged.get(key, 0) + pt.multiplicity
        self._points = tuple(
            PDPoint(b, d, m) for (b, d), m in sorted(merged.items())
        )
        coords = np.array([(p.birth, p.death) for p in self._points], dtype=float)
        self._coords = coords.reshape(-1, 2)
        self._coords.setflags(write=False)
        self._mults = np.array([p.multiplicity for p in self._points], dtype=np.int64)
        self._mults.setflags(write=False)
        self._total = int(self._mults.sum())

    @property
    def points(self) -> tuple[PDPoint, ...]:
        return self._points

    @property
    def total_count(self) -> int:
        """Number of points counted with multiplicity."""
        return self._total

    def coords(self) -> np.ndarray:
        """Distinct points as a read-only (n, 2) float array."""
        return self._coords

    def multiplicities(self) -> np.ndarray:
        return self._mults

    def __len__(self) -> int:
        return len(self._points)

    def __iter__(self) -> Iterator[PDPoint]:
        return iter(self._points)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PersistenceDiagram):
            return NotImplemented
        return self._points == other._points

    def __hash__(self) -> int:
        return hash(self._points)

    def __repr__(self) -> str:
        return (
            f"PersistenceDiagram({len(self._points)} distinct, "
            f"total {self._total})"
        )


def load_diagram(path) -> PersistenceDiagram:
    """Parse a text diagram file: one "birth death [multiplicity]" per line.

    '#' starts a comment, blank lines are ignored. Raises InvalidPointError
    for points with death <= birth, non-finite values or multiplicity < 1,
    and DiagramParseError for anything that does not tokenize; both carry
    the offending line number.
    """
    path = Path(path)
    points: list[PDPoint] = []
    with path.open() as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            fields = line.split()
            if len(fields) not in (2, 3):
                raise DiagramParseError(
                    f"{path.name}: expected 'birth death [multiplicity]' at line {lineno}"
                )
            try:
                birth = float(fields[0])
                death = float(fields[1])
            except ValueError:
                raise DiagramParseError(
                    f"{path.name}: malformed number at line {lineno}"
                ) from None
            if not (math.isfinite(birth) and math.isfinite(death)):
                raise InvalidPointError(f"{path.name}: non-finite value at line {lineno}")
            if death <= birth:
                raise InvalidPointError(f"{path.name}: death <= birth at line {lineno}")
            mult = 1
            if len(fields) == 3:
                try:
                    mult = int(fields[2])
                except ValueError:
                    raise DiagramParseError(
                        f"{path.name}: malformed multiplicity at line {lineno}"
                    ) from None
                if mult < 1:
                    raise InvalidPointError(
                        f"{path.name}: multiplicity < 1 at line {lineno}"
                    )
            points.append(PDPoint(birth, death, mult))
    return PersistenceDiagram(points)


def save_diagram(diagram: PersistenceDiagram, path) -> None:
    """Write a diagram in the text format with full round-trip precision."""
    path = Path(path)
    lines = []
    for p in diagram.points:
        if p.multiplicity == 1:
            lines.append(f"{p.birth!r} {p.death!r}")
        else:
            lines.append(f"{p.birth!r} {p.death!r} {p.multiplicity}")
    path.write_text("\n".join(lines) + ("\n" if lines else ""))


def gen_uniform(max_size: int, seed: int) -> PersistenceDiagram:
    """Synthetic diagram: birth ~ U(0, 200), death ~ U(birth, 300).

    Produces at most max_size points (duplicates would merge) and is a pure
    function of (max_size, seed).
    """
    if max_size < 1:
        raise ValueError("max_size must be >= 1")
    rng = np.random.default_rng(seed)
    births = rng.uniform(0.0, 200.0, max_size)
    deaths = rng.uniform(births, 300.0)
    bad = deaths <= births
    while bad.any():
        births[bad] = rng.uniform(0.0, 200.0, int(bad.sum()))
        deaths[bad] = rng.uniform(births[bad], 300.0)
        bad = deaths <= births
    return PersistenceDiagram(zip(births, deaths))


def gen_gaussian(max_size: int, seed: int) -> PersistenceDiagram:
    """Synthetic near-diagonal diagram: birth ~ U(0, 200), lifetime ~ |N(0, 1)|.

    Samples with lifetime below 1e-9 are rejected and redrawn so the minimum
    separation from the diagonal stays strictly positive.
    """
    if max_size < 1:
        raise ValueError("max_size must be >= 1")
    rng = np.random.default_rng(seed)
    births = rng.uniform(0.0, 200.0, max_size)
    lifetimes = np.abs(rng.normal(0.0, 1.0, max_size))
    bad = lifetimes < 1e-9
    while bad.any():
        n_bad = int(bad.sum())
        births[bad] = rng.uniform(0.0, 200.0, n_bad)
        lifetimes[bad] = np.abs(rng.normal(0.0, 1.0, n_bad))
        bad = lifetimes < 1e-9
    return PersistenceDiagram(zip(births, births + lifetimes))
