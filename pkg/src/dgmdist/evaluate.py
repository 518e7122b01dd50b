"""Evaluation harness: relative-error suites, recall@m, rank scatter, runtime.

All aggregates are pure functions of (dataset, seed); reruns with identical
seeds reproduce CSV bodies byte-for-byte apart from timing columns. Pairs and
queries can be evaluated concurrently with a configurable worker count;
aggregation is order-independent.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from functools import partial
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .diagram import GroundMetric, PersistenceDiagram, gen_uniform
from .embedding import embed, l1_distance
from .exact import DEFAULT_SIZE_CAP, SizeCapError, exact_distance
from .flowtree import flowtree_distance
from .quadtree import ShiftedQuadtree, TreeConfig, build_tree, union_coords

log = logging.getLogger(__name__)

METHODS = ("exact", "embedding", "flowtree")
TREE_METHODS = ("embedding", "flowtree")


@dataclass
class ErrorStats:
    method: str
    ground_metric: str
    mean_rel_error: float
    std_rel_error: float
    n_pairs: int


@dataclass
class PairErrorRow:
    pair_index: int
    left: int
    right: int
    method: str
    ground_metric: str
    d_true: float
    d_approx: float
    rel_error: float


@dataclass
class ErrorSuiteResult:
    stats: list[ErrorStats]
    rows: list[PairErrorRow]
    skipped_pairs: int
    total_pairs: int


@dataclass
class RecallCurve:
    method: str
    m_values: list[int]
    recall: list[float]


@dataclass
class BenchRow:
    size: int
    method: str
    ground_metric: str
    reps: int
    mean_seconds: float
    median_seconds: float
    tree_seconds: float


def relative_error(d_true: float, d_approx: float) -> float:
    """|d_true - d_approx| / d_true for a positive true distance."""
    if d_true <= 0:
        raise ValueError("relative error is undefined for d_true <= 0")
    return abs(d_true - d_approx) / d_true


def _check_methods(methods: Sequence[str]) -> None:
    for m in methods:
        if m not in METHODS:
            raise ValueError(f"unknown method {m!r}; expected one of {METHODS}")


def _approx_distance(
    method: str,
    tree: ShiftedQuadtree | None,
    first: PersistenceDiagram,
    second: PersistenceDiagram,
    metric: GroundMetric,
    size_cap: int,
) -> float:
    if method == "exact":
        return exact_distance(first, second, metric, size_cap)
    assert tree is not None
    if method == "embedding":
        return l1_distance(embed(tree, first), embed(tree, second))
    return flowtree_distance(tree, first, second, metric)


def _run_jobs(fn: Callable, jobs: list, workers: int) -> list:
    if workers <= 1:
        return [fn(job) for job in jobs]
    chunk = max(1, len(jobs) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs, chunksize=chunk))


def _error_pair_job(
    job,
    methods: tuple[str, ...],
    metrics: tuple[GroundMetric, ...],
    shared_trees: dict | None,
    size_cap: int,
    max_levels_cap: int,
):
    """Evaluate one sampled pair; returns rows, or None if the oracle cap bit."""
    pair_index, left, right, a, b, tree_seed = job
    rows: list[PairErrorRow] = []
    needs_tree = any(m in TREE_METHODS for m in methods)
    points = union_coords((a, b)) if (needs_tree and shared_trees is None) else None
    for metric in metrics:
        try:
            d_true = exact_distance(a, b, metric, size_cap)
        except SizeCapError:
            return None
        if d_true == 0.0:
            log.warning(
                "pair (%d, %d) has zero true distance under %s; "
                "relative error undefined, excluded",
                left,
                right,
                metric.value,
            )
            continue
        tree = None
        if needs_tree:
            if shared_trees is not None:
                tree = shared_trees[metric]
            else:
                tree = build_tree(
                    points,
                    TreeConfig(
                        seed=tree_seed,
                        max_levels_cap=max_levels_cap,
                        ground_metric=metric,
                    ),
                )
        for method in methods:
            d_approx = _approx_distance(method, tree, a, b, metric, size_cap)
            rows.append(
                PairErrorRow(
                    pair_index=pair_index,
                    left=left,
                    right=right,
                    method=method,
                    ground_metric=metric.value,
                    d_true=d_true,
                    d_approx=d_approx,
                    rel_error=relative_error(d_true, d_approx),
                )
            )
    return rows


def error_suite(
    dataset: Sequence[PersistenceDiagram],
    methods: Sequence[str],
    metrics: Sequence[GroundMetric],
    seed: int,
    n_pairs: int,
    tree_policy: str = "per_pair",
    size_cap: int = DEFAULT_SIZE_CAP,
    max_levels_cap: int = 40,
    workers: int = 1,
) -> ErrorSuiteResult:
    """Relative-error statistics of approximate methods over sampled pairs.

    Samples n_pairs distinct-index pairs, takes ground truth from the exact
    solver, and aggregates mean/std of the relative error per (method,
    metric). tree_policy chooses between one fresh tree per pair
    ("per_pair") and one tree over the whole dataset ("whole_dataset").
    """
    if len(dataset) < 2:
        raise ValueError("dataset must contain at least two diagrams")
    if n_pairs < 1:
        raise ValueError("n_pairs must be >= 1")
    if tree_policy not in ("per_pair", "whole_dataset"):
        raise ValueError(f"unknown tree_policy {tree_policy!r}")
    _check_methods(methods)

    shared_trees = None
    if tree_policy == "whole_dataset" and any(m in TREE_METHODS for m in methods):
        points = union_coords(dataset)
        shared_trees = {
            metric: build_tree(
                points,
                TreeConfig(
                    seed=seed, max_levels_cap=max_levels_cap, ground_metric=metric
                ),
            )
            for metric in metrics
        }

    rng = np.random.default_rng(seed)
    jobs = []
    for k in range(n_pairs):
        i, j = rng.choice(len(dataset), size=2, replace=False)
        tree_seed = int(rng.integers(0, 2**31 - 1))
        jobs.append((k, int(i), int(j), dataset[i], dataset[j], tree_seed))

    fn = partial(
        _error_pair_job,
        methods=tuple(methods),
        metrics=tuple(metrics),
        shared_trees=shared_trees,
        size_cap=size_cap,
        max_levels_cap=max_levels_cap,
    )
    results = _run_jobs(fn, jobs, workers)

    rows: list[PairErrorRow] = []
    skipped = 0
    for result in results:
        if result is None:
            skipped += 1
        else:
            rows.extend(result)

    stats: list[ErrorStats] = []
    for method in methods:
        for metric in metrics:
            errors = [
                r.rel_error
                for r in rows
                if r.method == method and r.ground_metric == metric.value
            ]
            if not errors:
                continue
            mean = math.fsum(errors) / len(errors)
            var = math.fsum((e - mean) ** 2 for e in errors) / len(errors)
            stats.append(
                ErrorStats(
                    method=method,
                    ground_metric=metric.value,
                    mean_rel_error=mean,
                    std_rel_error=math.sqrt(var),
                    n_pairs=len(errors),
                )
            )
    return ErrorSuiteResult(
        stats=stats, rows=rows, skipped_pairs=skipped, total_pairs=n_pairs
    )


def _method_distances(
    method: str,
    tree: ShiftedQuadtree | None,
    query: PersistenceDiagram,
    candidates: Sequence[PersistenceDiagram],
    metric: GroundMetric,
    size_cap: int,
    candidate_vectors=None,
) -> list[float]:
    if method == "embedding" and candidate_vectors is not None:
        qv = embed(tree, query)
        return [l1_distance(qv, cv) for cv in candidate_vectors]
    return [
        _approx_distance(method, tree, query, c, metric, size_cap)
        for c in candidates
    ]


def _ranks(distances: Sequence[float]) -> list[int]:
    """1-based rank of each candidate, ties broken by candidate index."""
    order = sorted(range(len(distances)), key=lambda c: (distances[c], c))
    ranks = [0] * len(distances)
    for position, c in enumerate(order):
        ranks[c] = position + 1
    return ranks


def _recall_query_job(
    job,
    method: str,
    metric: GroundMetric,
    tree: ShiftedQuadtree | None,
    candidates: tuple,
    candidate_vectors,
    size_cap: int,
):
    """Rank of the true nearest neighbor in the method's ordering, or None."""
    query = job
    try:
        true_d = [exact_distance(query, c, metric, size_cap) for c in candidates]
    except SizeCapError:
        return None
    true_nn = min(range(len(candidates)), key=lambda c: (true_d[c], c))
    try:
        approx_d = _method_distances(
            method, tree, query, candidates, metric, size_cap, candidate_vectors
        )
    except SizeCapError:
        return None
    return _ranks(approx_d)[true_nn]


def _knn_query_job(
    job,
    method: str,
    metric: GroundMetric,
    tree: ShiftedQuadtree | None,
    candidates: tuple,
    candidate_vectors,
    size_cap: int,
):
    try:
        return _method_distances(
            method, tree, job, candidates, metric, size_cap, candidate_vectors
        )
    except SizeCapError:
        return None


def knn_distances(
    queries: Sequence[PersistenceDiagram],
    candidates: Sequence[PersistenceDiagram],
    method: str,
    metric: GroundMetric,
    seed: int = 0,
    size_cap: int = DEFAULT_SIZE_CAP,
    max_levels_cap: int = 40,
    workers: int = 1,
) -> list[list[float] | None]:
    """Per-query candidate distances on one shared tree; None marks a query
    skipped because the oracle cap was exceeded."""
    if not candidates:
        raise ValueError("candidates must be non-empty")
    _check_methods([method])
    tree = None
    candidate_vectors = None
    if method in TREE_METHODS:
        tree = build_tree(
            union_coords(list(queries) + list(candidates)),
            TreeConfig(seed=seed, max_levels_cap=max_levels_cap, ground_metric=metric),
        )
        if method == "embedding":
            candidate_vectors = tuple(embed(tree, c) for c in candidates)
    fn = partial(
        _knn_query_job,
        method=method,
        metric=metric,
        tree=tree,
        candidates=tuple(candidates),
        candidate_vectors=candidate_vectors,
        size_cap=size_cap,
    )
    return _run_jobs(fn, list(queries), workers)


def recall_at_m(
    queries: Sequence[PersistenceDiagram],
    candidates: Sequence[PersistenceDiagram],
    method: str,
    metric: GroundMetric,
    m_max: int | None = None,
    seed: int = 0,
    size_cap: int = DEFAULT_SIZE_CAP,
    max_levels_cap: int = 40,
    workers: int = 1,
) -> tuple[RecallCurve, int]:
    """Fraction of queries whose true nearest neighbor lands in the top m.

    Ground truth comes from the exact solver; the approximate ranking uses a
    single tree over the whole dataset. Returns the curve and the number of
    queries skipped because the oracle cap was exceeded.
    """
    if not candidates:
        raise ValueError("candidates must be non-empty")
    if not queries:
        raise ValueError("queries must be non-empty")
    _check_methods([method])
    if m_max is None:
        m_max = len(candidates)

    tree = None
    candidate_vectors = None
    if method in TREE_METHODS:
        tree = build_tree(
            union_coords(list(queries) + list(candidates)),
            TreeConfig(seed=seed, max_levels_cap=max_levels_cap, ground_metric=metric),
        )
        if method == "embedding":
            candidate_vectors = tuple(embed(tree, c) for c in candidates)

    fn = partial(
        _recall_query_job,
        method=method,
        metric=metric,
        tree=tree,
        candidates=tuple(candidates),
        candidate_vectors=candidate_vectors,
        size_cap=size_cap,
    )
    results = _run_jobs(fn, list(queries), workers)
    ranks = [r for r in results if r is not None]
    skipped = len(results) - len(ranks)
    if not ranks:
        raise SizeCapError("every query exceeded the oracle size cap")

    m_values = list(range(1, m_max + 1))
    recall = [sum(1 for r in ranks if r <= m) / len(ranks) for m in m_values]
    return RecallCurve(method=method, m_values=m_values, recall=recall), skipped


def ranking_table(
    query: PersistenceDiagram,
    candidates: Sequence[PersistenceDiagram],
    method: str,
    metric: GroundMetric,
    tree: ShiftedQuadtree | None = None,
    seed: int = 0,
    size_cap: int = DEFAULT_SIZE_CAP,
    max_levels_cap: int = 40,
) -> list[tuple[int, int]]:
    """(true_rank, approx_rank) per candidate, ties broken by index."""
    if not candidates:
        raise ValueError("candidates must be non-empty")
    _check_methods([method])
    if method in TREE_METHODS and tree is None:
        tree = build_tree(
            union_coords([query] + list(candidates)),
            TreeConfig(seed=seed, max_levels_cap=max_levels_cap, ground_metric=metric),
        )
    true_d = [exact_distance(query, c, metric, size_cap) for c in candidates]
    approx_d = _method_distances(method, tree, query, candidates, metric, size_cap)
    true_ranks = _ranks(true_d)
    approx_ranks = _ranks(approx_d)
    return list(zip(true_ranks, approx_ranks))


def runtime_bench(
    sizes: Sequence[int],
    methods: Sequence[str],
    metric: GroundMetric = GroundMetric.L2,
    seed: int = 0,
    reps: int = 5,
    size_cap: int = DEFAULT_SIZE_CAP,
    max_levels_cap: int = 40,
) -> list[BenchRow]:
    """Wall-clock scaling of distance computation over synthetic diagrams.

    Tree construction is timed separately (tree_seconds); the per-rep timing
    covers only the distance computation on the already built tree. The exact
    method times the full assignment solve.
    """
    if list(sizes) != sorted(sizes):
        raise ValueError("sizes must be ascending")
    if reps < 1:
        raise ValueError("reps must be >= 1")
    _check_methods(methods)
    rng = np.random.default_rng(seed)
    rows: list[BenchRow] = []
    for size in sizes:
        first = gen_uniform(size, int(rng.integers(0, 2**31 - 1)))
        second = gen_uniform(size, int(rng.integers(0, 2**31 - 1)))
        tree_seed = int(rng.integers(0, 2**31 - 1))
        for method in methods:
            tree = None
            tree_seconds = 0.0
            if method in TREE_METHODS:
                t0 = time.perf_counter()
                tree = build_tree(
                    union_coords((first, second)),
                    TreeConfig(
                        seed=tree_seed,
                        max_levels_cap=max_levels_cap,
                        ground_metric=metric,
                    ),
                )
                tree_seconds = time.perf_counter() - t0
            times = []
            for _ in range(reps):
                t0 = time.perf_counter()
                _approx_distance(method, tree, first, second, metric, size_cap)
                times.append(time.perf_counter() - t0)
            rows.append(
                BenchRow(
                    size=size,
                    method=method,
                    ground_metric=metric.value,
                    reps=reps,
                    mean_seconds=statistics.fmean(times),
                    median_seconds=statistics.median(times),
                    tree_seconds=tree_seconds,
                )
            )
    return rows


def write_csv(path, fieldnames: Sequence[str], rows) -> None:
    """Stable-ordered CSV; rows are dicts or dataclasses."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(fieldnames))
        writer.writeheader()
        for row in rows:
            if not isinstance(row, dict):
                row = asdict(row)
            writer.writerow(row)


def write_json(path, rows) -> None:
    """JSON mirror of a CSV table: a list of records with the same fields."""
    path = Path(path)
    records = [row if isinstance(row, dict) else asdict(row) for row in rows]
    path.write_text(json.dumps(records, indent=2) + "\n")
