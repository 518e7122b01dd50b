"""Sparse level-weighted cell-count vectors and their L1 distance.

A diagram maps to one coordinate per occupied, non-terminal quadtree cell,
valued at (cell side) * (point count with multiplicity). Cells meeting the
diagonal are dropped, which makes the plain L1 distance between two such
vectors the tree-metric transport cost with diagonal absorption. Vectors are
sorted sparse lists, so the distance is a linear-time merge.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .diagram import PersistenceDiagram
from .quadtree import CellId, ShiftedQuadtree


class TreeMismatchError(ValueError):
    """Vectors from different trees were compared."""


@dataclass
class EmbeddingVector:
    """Sparse embedding bound to one tree via its signature.

    entries are ((level, ix, iy) -> side*count) pairs sorted by cell id;
    zero values and terminal cells never appear.
    """

    tree_signature: str
    entries: list[tuple[CellId, float]] = field(default_factory=list)
    total_mass: int | None = None

    def __len__(self) -> int:
        return len(self.entries)


def embed(tree: ShiftedQuadtree, diagram: PersistenceDiagram) -> EmbeddingVector:
    """Embed a diagram on a tree built over a superset of its points."""
    coords = diagram.coords()
    mults = diagram.multiplicities().astype(np.int64)
    entries: list[tuple[CellId, float]] = []
    if len(coords) > 0:
        for level in tree.levels():
            s = tree.side(level)
            ix, iy = tree.cell_indices(coords[:, 0], coords[:, 1], level)
            cells = np.stack([ix, iy], axis=1)
            uniq, inverse = np.unique(cells, axis=0, return_inverse=True)
            counts = np.bincount(inverse.ravel(), weights=mults).astype(np.int64)
            x0 = tree.origin[0] + uniq[:, 0] * s
            y0 = tree.origin[1] + uniq[:, 1] * s
            keep = (x0 > y0 + s) | (y0 > x0 + s)  # non-terminal only
            for (cx, cy), count in zip(uniq[keep].tolist(), counts[keep].tolist()):
                entries.append((CellId(level, cx, cy), s * count))
    return EmbeddingVector(
        tree_signature=tree.signature,
        entries=entries,
        total_mass=diagram.total_count,
    )


def l1_distance(a: EmbeddingVector, b: EmbeddingVector) -> float:
    """L1 distance between two embeddings of the same tree (sorted merge)."""
    if a.tree_signature != b.tree_signature:
        raise TreeMismatchError(
            f"vectors come from different trees: "
            f"{a.tree_signature} vs {b.tree_signature}"
        )
    diffs: list[float] = []
    ea, eb = a.entries, b.entries
    i = j = 0
    while i < len(ea) and j < len(eb):
        ka, va = ea[i]
        kb, vb = eb[j]
        if ka == kb:
            diffs.append(abs(va - vb))
            i += 1
            j += 1
        elif ka < kb:
            diffs.append(abs(va))
            i += 1
        else:
            diffs.append(abs(vb))
            j += 1
    diffs.extend(abs(v) for _, v in ea[i:])
    diffs.extend(abs(v) for _, v in eb[j:])
    return math.fsum(diffs)


def write_vector(vector: EmbeddingVector, path) -> None:
    """Export format: signature header, then sorted "level ix iy value" lines."""
    path = Path(path)
    lines = [vector.tree_signature]
    lines.extend(
        f"{c.level} {c.ix} {c.iy} {v!r}" for c, v in vector.entries
    )
    path.write_text("\n".join(lines) + "\n")


def read_vector(path) -> EmbeddingVector:
    path = Path(path)
    with path.open() as fh:
        signature = fh.readline().strip()
        if not signature:
            raise ValueError(f"{path.name}: missing tree signature header")
        entries: list[tuple[CellId, float]] = []
        for lineno, raw in enumerate(fh, start=2):
            line = raw.strip()
            if not line:
                continue
            fields = line.split()
            if len(fields) != 4:
                raise ValueError(f"{path.name}: malformed entry at line {lineno}")
            entries.append(
                (
                    CellId(int(fields[0]), int(fields[1]), int(fields[2])),
                    float(fields[3]),
                )
            )
    return EmbeddingVector(tree_signature=signature, entries=entries)
