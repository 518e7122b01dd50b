"""Randomly shifted quadtree grids over planar point sets.

Geometry conventions:

- The root square has side 2*D, where D is the larger bounding-box side of
  the input (or the minimum separation for a single distinct point). It is
  placed with its lower-left corner at (min - D) and then translated by a
  uniform random shift in [0, D)^2, so it contains the input for every draw.
- Levels are indexed level_lo = 0 (finest) through level_hi (the root);
  the cell side doubles with each level.
- Cell membership is half-open, [x0, x0+s) x [y0, y0+s), via floor indexing.
- The terminal test ("does the cell meet the diagonal y = x?") uses the
  closed square, so boundary contact counts as intersecting.
- The finest level is chosen so its side is strictly below half the minimum
  separation: each occupied finest cell then holds one distinct point and
  cannot be terminal. max_levels_cap guards near-duplicate inputs; when the
  cap binds, `truncated` is set and those guarantees lapse.

Trees never materialize cells; only occupied cells are enumerated per level.
"""

from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy.spatial import cKDTree

from .diagram import GroundMetric, PersistenceDiagram


class OutsideRootError(ValueError):
    """A queried point lies outside the tree's root cell."""


@dataclass(frozen=True)
class TreeConfig:
    """Reproducible tree construction parameters."""

    seed: int
    max_levels_cap: int = 40
    ground_metric: GroundMetric = GroundMetric.L2

    def __post_init__(self):
        if self.max_levels_cap < 2:
            raise ValueError("max_levels_cap must be >= 2")


@dataclass(frozen=True, order=True)
class CellId:
    level: int
    ix: int
    iy: int


class ShiftedQuadtree:
    """Immutable shifted-grid hierarchy; all queries are pure."""

    __slots__ = (
        "origin",
        "root_side",
        "level_lo",
        "level_hi",
        "shift",
        "spread",
        "seed",
        "ground_metric",
        "min_separation",
        "truncated",
        "signature",
    )

    def __init__(
        self,
        origin: tuple[float, float],
        root_side: float,
        level_lo: int,
        level_hi: int,
        shift: tuple[float, float],
        spread: float,
        seed: int,
        ground_metric: GroundMetric,
        min_separation: float,
        truncated: bool = False,
    ):
        if root_side <= 0:
            raise ValueError("root_side must be positive")
        if level_hi < level_lo:
            raise ValueError("level_hi must be >= level_lo")
        self.origin = (float(origin[0]), float(origin[1]))
        self.root_side = float(root_side)
        self.level_lo = int(level_lo)
        self.level_hi = int(level_hi)
        self.shift = (float(shift[0]), float(shift[1]))
        self.spread = float(spread)
        self.seed = int(seed)
        self.ground_metric = ground_metric
        self.min_separation = float(min_separation)
        self.truncated = bool(truncated)
        digest = hashlib.blake2b(
            struct.pack(
                "<ddddd2i",
                *self.origin,
                self.root_side,
                *self.shift,
                self.level_lo,
                self.level_hi,
            )
            + ground_metric.value.encode(),
            digest_size=8,
        ).hexdigest()
        self.signature = f"qt:{self.seed}:{digest}"

    @property
    def num_levels(self) -> int:
        return self.level_hi - self.level_lo + 1

    def levels(self) -> range:
        """Level indices from finest to coarsest, inclusive."""
        return range(self.level_lo, self.level_hi + 1)

    def side(self, level: int) -> float:
        self._check_level(level)
        return self.root_side / (1 << (self.level_hi - level))

    def grid_cells(self, level: int) -> int:
        """Cells per axis at a level."""
        self._check_level(level)
        return 1 << (self.level_hi - level)

    def contains(self, point: tuple[float, float]) -> bool:
        x, y = point
        ox, oy = self.origin
        s = self.root_side
        return ox <= x <= ox + s and oy <= y <= oy + s

    def cell_of(self, point: tuple[float, float], level: int) -> CellId:
        """Cell holding a point at a level; left/bottom edges inclusive."""
        self._check_level(level)
        if not self.contains(point):
            raise OutsideRootError(f"point {point} outside root cell")
        s = self.side(level)
        n = self.grid_cells(level)
        ix = min(int((point[0] - self.origin[0]) // s), n - 1)
        iy = min(int((point[1] - self.origin[1]) // s), n - 1)
        return CellId(level, ix, iy)

    def cell_indices(
        self, xs: np.ndarray, ys: np.ndarray, level: int
    ) -> tuple[np.ndarray, np.ndarray]:
        """Vectorized cell_of over coordinate arrays."""
        self._check_level(level)
        ox, oy = self.origin
        hi = self.root_side
        if ((xs < ox) | (xs > ox + hi) | (ys < oy) | (ys > oy + hi)).any():
            raise OutsideRootError("point outside root cell")
        s = self.side(level)
        n = self.grid_cells(level)
        ix = np.minimum(np.floor((xs - ox) / s).astype(np.int64), n - 1)
        iy = np.minimum(np.floor((ys - oy) / s).astype(np.int64), n - 1)
        return ix, iy

    def cell_corner(self, cell: CellId) -> tuple[float, float]:
        s = self.side(cell.level)
        return (self.origin[0] + cell.ix * s, self.origin[1] + cell.iy * s)

    def is_terminal(self, cell: CellId) -> bool:
        """True iff the closed cell square intersects the line y = x."""
        s = self.side(cell.level)
        x0, y0 = self.cell_corner(cell)
        return x0 <= y0 + s and y0 <= x0 + s

    def root_cell(self) -> CellId:
        return CellId(self.level_hi, 0, 0)

    def occupied_cells(
        self, diagram: PersistenceDiagram, level: int
    ) -> dict[CellId, int]:
        """Multiplicity-weighted point counts of the diagram's occupied cells."""
        coords = diagram.coords()
        if coords.size == 0:
            return {}
        ix, iy = self.cell_indices(coords[:, 0], coords[:, 1], level)
        counts: dict[CellId, int] = {}
        for cx, cy, m in zip(ix.tolist(), iy.tolist(), diagram.multiplicities().tolist()):
            key = CellId(level, cx, cy)
            counts[key] = counts.get(key, 0) + m
        return counts

    def meta(self) -> dict:
        """Reproducibility metadata for reports."""
        return {
            "seed": self.seed,
            "signature": self.signature,
            "origin": list(self.origin),
            "root_side": self.root_side,
            "shift": list(self.shift),
            "levels": self.num_levels,
            "level_lo": self.level_lo,
            "level_hi": self.level_hi,
            "spread": self.spread,
            "min_separation": self.min_separation,
            "ground_metric": self.ground_metric.value,
            "truncated": self.truncated,
        }

    def _check_level(self, level: int) -> None:
        if not (self.level_lo <= level <= self.level_hi):
            raise ValueError(
                f"level {level} outside [{self.level_lo}, {self.level_hi}]"
            )

    def __repr__(self) -> str:
        return (
            f"ShiftedQuadtree(seed={self.seed}, root_side={self.root_side:.6g}, "
            f"levels={self.num_levels})"
        )


def _min_separation(points: np.ndarray, metric: GroundMetric) -> float:
    """Smallest of: pairwise distances between distinct points, and their
    distances to the diagonal, under the given metric."""
    diag = np.abs(points[:, 1] - points[:, 0]) * metric.diagonal_factor
    smallest = float(diag.min())
    if len(points) > 1:
        kd = cKDTree(points)
        dists, _ = kd.query(points, k=2, p=metric.q)
        smallest = min(smallest, float(dists[:, 1].min()))
    return smallest


def build_tree(points, config: TreeConfig) -> ShiftedQuadtree:
    """Build a randomly shifted quadtree over a non-empty planar point set.

    The shift is drawn from config.seed; identical (points, config) always
    produce an identical tree. Depth adapts to the minimum separation so that
    the finest cell side is strictly below half of it, unless
    config.max_levels_cap binds (then `truncated` is set on the result).
    """
    pts = np.asarray(points, dtype=float)
    if pts.size == 0:
        raise ValueError("cannot build a tree over an empty point set")
    pts = pts.reshape(-1, 2)
    if not np.isfinite(pts).all():
        raise ValueError("input points must have finite coordinates")
    distinct = np.unique(pts, axis=0)

    metric = config.ground_metric
    delta_min = _min_separation(distinct, metric)
    if delta_min <= 0.0:
        raise ValueError(
            "minimum separation is zero (a point lies on the diagonal)"
        )

    mins = distinct.min(axis=0)
    extent = distinct.max(axis=0) - mins
    span = float(extent.max())
    if span == 0.0:
        # single distinct point: scale the root to the diagonal distance
        span = delta_min
    root_side = 2.0 * span

    levels = max(2, int(math.floor(math.log2(root_side / delta_min))) + 3)
    while root_side / 2.0 ** (levels - 1) >= 0.5 * delta_min:
        levels += 1
    truncated = levels > config.max_levels_cap
    if truncated:
        levels = config.max_levels_cap

    rng = np.random.default_rng(config.seed)
    shift = rng.uniform(0.0, span, size=2)
    origin = (float(mins[0] - span + shift[0]), float(mins[1] - span + shift[1]))

    if metric is GroundMetric.L1:
        diameter = float(extent.sum())
    elif metric is GroundMetric.L2:
        diameter = float(math.hypot(*extent))
    else:
        diameter = float(extent.max())
    spread = diameter / delta_min

    return ShiftedQuadtree(
        origin=origin,
        root_side=root_side,
        level_lo=0,
        level_hi=levels - 1,
        shift=(float(shift[0]), float(shift[1])),
        spread=spread,
        seed=config.seed,
        ground_metric=metric,
        min_separation=delta_min,
        truncated=truncated,
    )


def union_coords(diagrams: Iterable[PersistenceDiagram]) -> np.ndarray:
    """Stacked distinct coordinates of several diagrams (may repeat across
    diagrams; build_tree deduplicates)."""
    arrays = [d.coords() for d in diagrams if len(d) > 0]
    if not arrays:
        return np.zeros((0, 2))
    return np.vstack(arrays)


def build_tree_for_diagrams(
    diagrams: Iterable[PersistenceDiagram], config: TreeConfig
) -> ShiftedQuadtree:
    """One shared tree over the union of several diagrams' points."""
    return build_tree(union_coords(diagrams), config)
