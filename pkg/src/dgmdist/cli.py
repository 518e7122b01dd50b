"""Command-line surface: generate, dist, embed, knn, eval, bench.

Exit codes: 0 success, 2 usage, 3 diagram parse error, 4 oracle size cap,
5 internal error. The first stderr line echoes the fully resolved arguments,
so every run can be reproduced from its log. The default seed is 0 and can
be overridden with the DGMDIST_SEED environment variable.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .diagram import (
    DiagramError,
    GroundMetric,
    PersistenceDiagram,
    gen_gaussian,
    gen_uniform,
    load_diagram,
    save_diagram,
)
from .embedding import embed, l1_distance, write_vector
from .evaluate import (
    TREE_METHODS,
    error_suite,
    knn_distances,
    ranking_table,
    recall_at_m,
    runtime_bench,
    write_csv,
    write_json,
)
from .exact import SizeCapError, exact_distance
from .flowtree import greedy_match
from .quadtree import TreeConfig, build_tree, union_coords

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_SIZE_CAP = 4
EXIT_INTERNAL = 5

log = logging.getLogger("dgmdist")


class UsageError(Exception):
    """Invalid argument values detected after parsing."""


@dataclass
class DistanceReport:
    """Single-distance result printed as JSON by the dist command."""

    method: str
    metric: str
    value: float
    seeds: list[int] = field(default_factory=list)
    tree_meta: list[dict] = field(default_factory=list)
    elapsed: float = 0.0

    def to_json(self) -> str:
        return json.dumps(
            {
                "method": self.method,
                "metric": self.metric,
                "value": self.value,
                "seeds": self.seeds,
                "tree_meta": self.tree_meta,
                "elapsed": self.elapsed,
            },
            indent=2,
        )


def _default_seed() -> int:
    return int(os.environ.get("DGMDIST_SEED", "0"))


def _metric(name: str) -> GroundMetric:
    return GroundMetric(name)


def _derived_seeds(seed: int, count: int) -> list[int]:
    rng = np.random.default_rng(seed)
    return [int(s) for s in rng.integers(0, 2**31 - 1, count)]


def _load_dir(directory) -> tuple[list[str], list[PersistenceDiagram]]:
    """Diagrams of a directory in sorted file order, with their stems."""
    directory = Path(directory)
    if not directory.is_dir():
        raise UsageError(f"not a directory: {directory}")
    paths = sorted(directory.glob("*.txt"))
    if not paths:
        raise UsageError(f"no diagram files (*.txt) in {directory}")
    return [p.stem for p in paths], [load_diagram(p) for p in paths]


def _echo_args(args: argparse.Namespace) -> None:
    resolved = {
        k: v for k, v in sorted(vars(args).items()) if k not in ("func",)
    }
    print(f"# dgmdist {args.command}: {json.dumps(resolved, default=str)}", file=sys.stderr)


def cmd_gen(args) -> int:
    if args.count < 1:
        raise UsageError("count must be >= 1")
    if args.max_size < 1:
        raise UsageError("max-size must be >= 1")
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    generator = gen_uniform if args.kind == "uniform" else gen_gaussian
    file_seeds = _derived_seeds(args.seed, args.count)
    manifest = {
        "kind": args.kind,
        "count": args.count,
        "max_size": args.max_size,
        "seed": args.seed,
        "files": [],
    }
    for i in range(args.count):
        # size ramp: file i holds up to max_size*(i+1)/count points
        size = max(1, round(args.max_size * (i + 1) / args.count))
        diagram = generator(size, file_seeds[i])
        name = f"dgm_{i:04d}.txt"
        save_diagram(diagram, out_dir / name)
        manifest["files"].append({"name": name, "max_size": size, "seed": file_seeds[i]})
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    print(f"wrote {args.count} diagrams to {out_dir}")
    return EXIT_OK


def cmd_dist(args) -> int:
    for path in (args.first, args.second):
        if not Path(path).is_file():
            raise UsageError(f"no such file: {path}")
    first = load_diagram(args.first)
    second = load_diagram(args.second)
    metric = _metric(args.metric)
    t0 = time.perf_counter()
    if args.method == "exact":
        value = exact_distance(first, second, metric)
        seeds: list[int] = []
        tree_meta: list[dict] = []
    else:
        seeds = _derived_seeds(args.seed, args.trees)
        values = []
        tree_meta = []
        if first.total_count == 0 and second.total_count == 0:
            values = [0.0]
            seeds = []
        else:
            points = union_coords((first, second))
            for tree_seed in seeds:
                tree = build_tree(
                    points, TreeConfig(seed=tree_seed, ground_metric=metric)
                )
                meta = tree.meta()
                if args.method == "flowtree":
                    matching = greedy_match(tree, first, second, metric)
                    values.append(matching.cost)
                    meta["root_fallback"] = matching.root_fallback
                else:
                    values.append(
                        l1_distance(embed(tree, first), embed(tree, second))
                    )
                tree_meta.append(meta)
        value = min(values) if args.reduce == "min" else sum(values) / len(values)
    elapsed = time.perf_counter() - t0
    report = DistanceReport(
        method=args.method,
        metric=args.metric,
        value=value,
        seeds=seeds,
        tree_meta=tree_meta,
        elapsed=elapsed,
    )
    print(report.to_json())
    return EXIT_OK


def cmd_embed(args) -> int:
    names, diagrams = _load_dir(args.input)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    metric = _metric(args.metric)
    tree = build_tree(
        union_coords(diagrams), TreeConfig(seed=args.seed, ground_metric=metric)
    )
    for name, diagram in zip(names, diagrams):
        write_vector(embed(tree, diagram), out_dir / f"{name}.vec")
    print(f"wrote {len(names)} vectors to {out_dir} (tree {tree.signature})")
    return EXIT_OK


def cmd_knn(args) -> int:
    if args.k < 1:
        raise UsageError("k must be >= 1")
    query_names, queries = _load_dir(args.queries)
    cand_names, candidates = _load_dir(args.candidates)
    metric = _metric(args.metric)
    k = min(args.k, len(candidates))

    per_query = knn_distances(
        queries,
        candidates,
        args.method,
        metric,
        seed=args.seed,
        workers=args.workers,
    )

    rows = []
    skipped = 0
    for qname, distances in zip(query_names, per_query):
        if distances is None:
            skipped += 1
            log.warning("query %s skipped: oracle size cap exceeded", qname)
            continue
        order = sorted(range(len(candidates)), key=lambda c: (distances[c], c))
        for rank, c in enumerate(order[:k], start=1):
            rows.append(
                {
                    "query": qname,
                    "rank": rank,
                    "candidate": cand_names[c],
                    "distance": distances[c],
                }
            )

    out = Path(args.out) if args.out else None
    fieldnames = ["query", "rank", "candidate", "distance"]
    if out:
        write_csv(out, fieldnames, rows)
    else:
        writer = csv.DictWriter(sys.stdout, fieldnames=fieldnames)
        writer.writeheader()
        writer.writerows(rows)
    if skipped > 0.5 * len(queries):
        log.error("%d of %d queries skipped", skipped, len(queries))
        return EXIT_SIZE_CAP
    return EXIT_OK


def cmd_eval(args) -> int:
    _, dataset = _load_dir(args.data)
    methods = args.methods.split(",")
    metrics = [_metric(m) for m in args.metrics.split(",")]
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    suite = error_suite(
        dataset,
        methods,
        metrics,
        seed=args.seed,
        n_pairs=args.n_pairs,
        tree_policy=args.tree_policy,
        workers=args.workers,
    )
    pair_fields = [
        "pair_index",
        "left",
        "right",
        "method",
        "ground_metric",
        "d_true",
        "d_approx",
        "rel_error",
    ]
    stats_fields = ["method", "ground_metric", "mean_rel_error", "std_rel_error", "n_pairs"]
    write_csv(out_dir / "pair_errors.csv", pair_fields, suite.rows)
    write_json(out_dir / "pair_errors.json", suite.rows)
    write_csv(out_dir / "error_stats.csv", stats_fields, suite.stats)
    write_json(out_dir / "error_stats.json", suite.stats)

    # 10/90 query/candidate split, deterministic per seed
    rng = np.random.default_rng(args.seed)
    order = rng.permutation(len(dataset))
    n_queries = max(1, len(dataset) // 10)
    query_idx = sorted(int(i) for i in order[:n_queries])
    cand_idx = sorted(int(i) for i in order[n_queries:])
    queries = [dataset[i] for i in query_idx]
    candidates = [dataset[i] for i in cand_idx]

    primary_metric = metrics[0]
    recall_rows = []
    skipped_queries = 0
    for method in methods:
        curve, skipped = recall_at_m(
            queries,
            candidates,
            method,
            primary_metric,
            seed=args.seed,
            workers=args.workers,
        )
        skipped_queries = max(skipped_queries, skipped)
        recall_rows.extend(
            {
                "method": method,
                "ground_metric": primary_metric.value,
                "m": m,
                "recall": r,
            }
            for m, r in zip(curve.m_values, curve.recall)
        )
    write_csv(out_dir / "recall.csv", ["method", "ground_metric", "m", "recall"], recall_rows)
    write_json(out_dir / "recall.json", recall_rows)

    ranking_rows = []
    shared_tree = None
    if any(m in TREE_METHODS for m in methods):
        shared_tree = build_tree(
            union_coords(dataset),
            TreeConfig(seed=args.seed, ground_metric=primary_metric),
        )
    for method in methods:
        tree = shared_tree if method in TREE_METHODS else None
        for qpos, query in zip(query_idx, queries):
            table = ranking_table(
                query, candidates, method, primary_metric, tree=tree, seed=args.seed
            )
            ranking_rows.extend(
                {
                    "method": method,
                    "ground_metric": primary_metric.value,
                    "query": qpos,
                    "candidate": cand_idx[c],
                    "true_rank": tr,
                    "approx_rank": ar,
                }
                for c, (tr, ar) in enumerate(table)
            )
    write_csv(
        out_dir / "ranking.csv",
        ["method", "ground_metric", "query", "candidate", "true_rank", "approx_rank"],
        ranking_rows,
    )
    write_json(out_dir / "ranking.json", ranking_rows)

    bench_sizes = [int(s) for s in args.bench_sizes.split(",")]
    bench_rows = runtime_bench(
        bench_sizes, methods, metric=primary_metric, seed=args.seed, reps=args.reps
    )
    bench_fields = [
        "size",
        "method",
        "ground_metric",
        "reps",
        "mean_seconds",
        "median_seconds",
        "tree_seconds",
    ]
    write_csv(out_dir / "runtime.csv", bench_fields, bench_rows)
    write_json(out_dir / "runtime.json", bench_rows)

    print(f"wrote evaluation CSVs to {out_dir}")
    skip_rate = suite.skipped_pairs / suite.total_pairs
    if skip_rate > 0.5 or skipped_queries > 0.5 * len(queries):
        log.error("skipped rate above 50%% (pairs: %d/%d)", suite.skipped_pairs, suite.total_pairs)
        return EXIT_SIZE_CAP
    return EXIT_OK


def cmd_bench(args) -> int:
    sizes = [int(s) for s in args.sizes.split(",")]
    methods = args.methods.split(",")
    rows = runtime_bench(
        sizes, methods, metric=_metric(args.metric), seed=args.seed, reps=args.reps
    )
    fields = [
        "size",
        "method",
        "ground_metric",
        "reps",
        "mean_seconds",
        "median_seconds",
        "tree_seconds",
    ]
    out = Path(args.out)
    write_csv(out, fields, rows)
    print(f"wrote {len(rows)} bench rows to {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dgmdist",
        description="Exact and approximate 1-Wasserstein distances for persistence diagrams",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_seed(p):
        p.add_argument(
            "--seed", type=int, default=_default_seed(), help="random seed (env DGMDIST_SEED)"
        )

    def add_metric(p):
        p.add_argument(
            "--metric", choices=["l1", "l2", "linf"], default="l2", help="ground metric"
        )

    p = sub.add_parser("gen", help="generate synthetic diagram files")
    p.add_argument("--kind", choices=["uniform", "gaussian"], required=True)
    p.add_argument("--count", type=int, required=True, help="number of files")
    p.add_argument("--max-size", type=int, required=True, help="size cap of the largest diagram")
    p.add_argument("--out", required=True, help="output directory")
    add_seed(p)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("dist", help="distance between two diagram files")
    p.add_argument("first")
    p.add_argument("second")
    p.add_argument("--method", choices=["exact", "embedding", "flowtree"], default="flowtree")
    add_metric(p)
    add_seed(p)
    p.add_argument("--trees", type=int, default=1, help="number of independent trees")
    p.add_argument("--reduce", choices=["mean", "min"], default="mean")
    p.set_defaults(func=cmd_dist)

    p = sub.add_parser("embed", help="export embedding vectors for a directory of diagrams")
    p.add_argument("--in", dest="input", required=True, help="input directory")
    p.add_argument("--out", required=True, help="output directory")
    add_metric(p)
    add_seed(p)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("knn", help="rank candidates for each query diagram")
    p.add_argument("--queries", required=True)
    p.add_argument("--candidates", required=True)
    p.add_argument("--method", choices=["exact", "embedding", "flowtree"], default="flowtree")
    add_metric(p)
    p.add_argument("-k", type=int, default=5)
    add_seed(p)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default=None, help="output CSV (default stdout)")
    p.set_defaults(func=cmd_knn)

    p = sub.add_parser("eval", help="run the evaluation harness on a dataset directory")
    p.add_argument("--data", required=True)
    p.add_argument("--methods", default="embedding,flowtree", help="comma-separated")
    p.add_argument("--metrics", default="l2", help="comma-separated")
    p.add_argument("--out", required=True, help="output directory")
    add_seed(p)
    p.add_argument("--n-pairs", type=int, default=50)
    p.add_argument("--tree-policy", choices=["per_pair", "whole_dataset"], default="per_pair")
    p.add_argument("--bench-sizes", default="100,200", help="sizes for the runtime table")
    p.add_argument("--reps", type=int, default=3)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="runtime scaling table")
    p.add_argument("--sizes", required=True, help="comma-separated diagram sizes")
    p.add_argument("--methods", default="embedding,flowtree")
    add_metric(p)
    p.add_argument("--reps", type=int, default=5)
    add_seed(p)
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        stream=sys.stderr, level=logging.WARNING, format="%(message)s", force=True
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    _echo_args(args)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DiagramError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except SizeCapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SIZE_CAP
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
