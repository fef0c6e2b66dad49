"""Command-line surface: generate data, build indexes, query, benchmark.

Exit codes: 0 success, 2 usage error, 3 data/format error.
"""

import argparse
import csv
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .base import FormatError
from .cost import choose_blocks, estimate_cost
from .indexes import (
    LinearScanIndex,
    MultiIndexHashing,
    MultiIndexSketchTrie,
    MultiIndexScratch,
    SingleIndexHashing,
    SketchTrieIndex,
)
from .ingest import (
    MinhashParams,
    SyntheticSpec,
    generate,
    read_sketches,
    read_token_sets,
    sketch_token_sets,
    write_sketches,
)
from .sketches import SketchParams
from .trie import SearchScratch
from .serialize import index_to_bytes, load_index

VARIANTS = ("si-bst", "mi-bst", "sih", "mih", "scan")


def _bits(text):
    value = int(text)
    if not 1 <= value <= 8:
        raise argparse.ArgumentTypeError(f"b must be in [1, 8], got {value}")
    return value


def _length(text):
    value = int(text)
    if not 1 <= value <= 256:
        raise argparse.ArgumentTypeError(f"L must be in [1, 256], got {value}")
    return value


def _lam(text):
    value = float(text)
    if not 0.0 < value < 1.0:
        raise argparse.ArgumentTypeError(f"lambda must be in (0, 1), got {value}")
    return value


def _nonneg(text):
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {value}")
    return value


def _int_list(text):
    try:
        return [int(part) for part in text.split(",") if part]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated integer list, got {text!r}")


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="sketchtrie",
        description="Succinct-trie and hash-table indexes for Hamming-range search "
        "over b-bit integer sketches.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a sketch file")
    gen.add_argument("--kind", choices=("uniform", "planted", "minhash"), default="uniform")
    gen.add_argument("--output", required=True)
    gen.add_argument("-n", type=_nonneg, default=0, help="sketch count (uniform/planted)")
    gen.add_argument("-b", type=_bits, default=2)
    gen.add_argument("-L", type=_length, default=16)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--clusters", type=_nonneg, default=16)
    gen.add_argument("--radius", type=_nonneg, default=1)
    gen.add_argument("--tokens", help="token-set file for --kind minhash")
    gen.set_defaults(func=_cmd_gen)

    build = sub.add_parser("build", help="build and serialize an index")
    build.add_argument("--input", required=True, help="BSK1 sketch file")
    build.add_argument("--output", required=True, help="BST1 index file")
    build.add_argument("--variant", choices=VARIANTS, default="si-bst")
    build.add_argument("--blocks", type=int, help="block count for mi-* variants")
    build.add_argument("--policy", choices=("uniform", "refined"), default="refined")
    build.add_argument("--lambda", dest="lam", type=_lam, default=0.5)
    build.add_argument("--dense-level", type=int)
    build.add_argument("--sparse-level", type=int)
    build.add_argument("--probe-budget", type=_nonneg)
    build.set_defaults(func=_cmd_build)

    query = sub.add_parser("query", help="run Hamming-range queries against an index")
    query.add_argument("--index", required=True)
    query.add_argument("--queries", required=True, help="BSK1 file of query sketches")
    query.add_argument("--tau", type=_nonneg, action="append", required=True)
    query.add_argument("--format", choices=("text", "csv", "jsonl"), default="text")
    query.add_argument("--threads", type=int, default=1)
    query.set_defaults(func=_cmd_query)

    bench = sub.add_parser("bench", help="measure variants and print a CSV")
    bench.add_argument("--input", help="BSK1 sketch file (omit with --predict)")
    bench.add_argument("--variant", action="append", choices=VARIANTS,
                       help="repeatable; default: si-bst and scan")
    bench.add_argument("--tau", type=_nonneg, action="append")
    bench.add_argument("--blocks", type=_int_list, default=[2],
                       help="comma-separated block counts for mi-* variants")
    bench.add_argument("--policy", choices=("uniform", "refined"), default="uniform")
    bench.add_argument("--lambda", dest="lam", type=_lam, default=0.5)
    bench.add_argument("--sample", type=_nonneg, default=1000,
                       help="queries sampled from the dataset")
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--probe-budget", type=_nonneg)
    bench.add_argument("--predict", action="store_true",
                       help="cost model only; no data is read, no index built")
    bench.add_argument("-n", type=_nonneg, default=2**32, help="database size for --predict")
    bench.add_argument("-b", type=_int_list, default=[2], help="b values for --predict")
    bench.add_argument("-L", type=_length, default=32, help="L for --predict")
    bench.set_defaults(func=_cmd_bench)
    return parser


# ---------------------------------------------------------------------------


def _cmd_gen(args):
    if args.kind == "minhash":
        if not args.tokens:
            print("gen --kind minhash requires --tokens", file=sys.stderr)
            return 2
        sets = read_token_sets(args.tokens)
        ds = sketch_token_sets(sets, MinhashParams(args.b, args.L, args.seed))
    else:
        try:
            spec = SyntheticSpec(
                kind=args.kind,
                n=args.n,
                params=SketchParams(args.b, args.L),
                seed=args.seed,
                clusters=max(1, args.clusters),
                radius=args.radius,
            )
        except ValueError as exc:
            print(str(exc), file=sys.stderr)
            return 2
        ds = generate(spec)
    write_sketches(ds, args.output)
    print(f"wrote {len(ds)} sketches (b={ds.params.b}, L={ds.params.L}) to {args.output}")
    return 0


def _make_index(args, ds):
    variant = args.variant
    if variant == "scan":
        return LinearScanIndex(ds.params.b)
    if variant == "sih":
        return SingleIndexHashing(ds.params.b, probe_budget=args.probe_budget)
    if variant == "si-bst":
        return SketchTrieIndex(
            ds.params.b,
            lam=args.lam,
            dense_level=args.dense_level,
            sparse_level=args.sparse_level,
        )
    m = args.blocks
    if m is None:
        m = choose_blocks(ds.params.b, ds.params.L, len(ds), tau=2)
        print(f"blocks not given; cost model picked m={m}")
    if not 1 <= m <= ds.params.L:
        print(f"block count {m} out of range [1, {ds.params.L}]", file=sys.stderr)
        return None
    if variant == "mi-bst":
        return MultiIndexSketchTrie(ds.params.b, m=m, policy=args.policy, lam=args.lam)
    return MultiIndexHashing(ds.params.b, m=m, policy=args.policy)


def _cmd_build(args):
    ds = read_sketches(args.input)
    index = _make_index(args, ds)
    if index is None:
        return 2
    try:
        index.fit(ds)
    except ValueError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    blob = index_to_bytes(index)
    with open(args.output, "wb") as f:
        f.write(blob)
    params = ds.params
    print(f"variant={args.variant} n={len(ds)} b={params.b} L={params.L}")
    if isinstance(index, SketchTrieIndex):
        trie = index.trie_
        plan = trie.plan
        print(
            f"dense_level={plan.dense_level} sparse_level={plan.sparse_level} "
            f"leaves={trie.num_leaves}"
        )
        print(trie.space_report().to_text())
    elif isinstance(index, MultiIndexSketchTrie):
        for j, trie in enumerate(index.block_tries_):
            plan = trie.plan
            print(
                f"block={j + 1} length={index.partition_.lengths[j]} "
                f"dense_level={plan.dense_level} sparse_level={plan.sparse_level} "
                f"leaves={trie.num_leaves}"
            )
    print(f"index bytes: {len(blob)}")
    return 0


def _query_record(index, qrow, qindex, tau):
    scratch = None
    if isinstance(index, SketchTrieIndex):
        scratch = SearchScratch()
    elif isinstance(index, (MultiIndexSketchTrie, MultiIndexHashing)):
        scratch = MultiIndexScratch(index.n_, index.m)
    start = time.perf_counter()
    if scratch is None:
        ids = index.query(qrow, tau)
    else:
        ids = index.query(qrow, tau, scratch)
    elapsed_ms = (time.perf_counter() - start) * 1e3
    nodes = scratch.nodes_visited if isinstance(scratch, SearchScratch) else 0
    candidates = (
        sum(scratch.block_candidates) if isinstance(scratch, MultiIndexScratch) else len(ids)
    )
    return {
        "query": qindex,
        "tau": tau,
        "count": len(ids),
        "ids": " ".join(map(str, ids)),
        "time_ms": round(elapsed_ms, 4),
        "nodes_visited": nodes,
        "candidates": candidates,
    }


def _cmd_query(args):
    index = load_index(args.index)
    queries = read_sketches(args.queries)
    if queries.params != index.params_:
        raise FormatError(
            f"query parameters (b={queries.params.b}, L={queries.params.L}) do not match "
            f"index (b={index.params_.b}, L={index.params_.L})"
        )
    for tau in args.tau:
        if tau > queries.params.L:
            print(f"tau {tau} exceeds L={queries.params.L}", file=sys.stderr)
            return 2
    jobs = [
        (queries.row_bytes(r), r + 1, tau) for r in range(len(queries)) for tau in args.tau
    ]
    if args.threads > 1:
        with ThreadPoolExecutor(max_workers=args.threads) as pool:
            records = list(pool.map(lambda job: _query_record(index, *job), jobs))
    else:
        records = [_query_record(index, *job) for job in jobs]
    _emit_records(records, args.format)
    return 0


def _emit_records(records, fmt):
    if fmt == "jsonl":
        for rec in records:
            print(json.dumps(rec))
        return
    if fmt == "csv":
        writer = csv.DictWriter(sys.stdout, fieldnames=list(records[0]) if records else [])
        if records:
            writer.writeheader()
            writer.writerows(records)
        return
    for rec in records:
        print(
            f"query={rec['query']} tau={rec['tau']} count={rec['count']} "
            f"ids={rec['ids']} time_ms={rec['time_ms']} nodes={rec['nodes_visited']} "
            f"candidates={rec['candidates']}"
        )


def _cmd_bench(args):
    writer = csv.writer(sys.stdout)
    taus = args.tau or [1, 2, 3, 4, 5]
    if args.predict:
        writer.writerow(
            ["b", "L", "n", "tau", "m", "policy", "sigs",
             "cost_single", "cost_multi", "expected_solutions", "expected_candidates"]
        )
        for b in args.b:
            if not 1 <= b <= 8:
                print(f"b={b} out of range [1, 8]", file=sys.stderr)
                return 2
            for m in args.blocks:
                for tau in taus:
                    est = estimate_cost(b, args.L, tau, args.n, m=m, policy=args.policy)
                    writer.writerow(
                        [b, args.L, args.n, tau, m, args.policy, est.signatures,
                         f"{est.single_cost:.6g}", f"{est.multi_cost:.6g}",
                         f"{est.expected_solutions:.6g}",
                         f"{sum(est.expected_candidates):.6g}"]
                    )
        return 0
    if not args.input:
        print("bench requires --input unless --predict is given", file=sys.stderr)
        return 2
    ds = read_sketches(args.input)
    params = ds.params
    variants = args.variant or ["si-bst", "scan"]
    rng = np.random.default_rng(args.seed)
    sample = min(args.sample, len(ds)) or len(ds)
    picks = rng.choice(len(ds), size=sample, replace=sample > len(ds))
    qrows = [ds.row_bytes(int(r)) for r in picks]
    writer.writerow(
        ["variant", "m", "policy", "tau", "queries", "mean_ms", "mean_answers",
         "index_bytes", "pred_cost_single", "pred_cost_multi", "speedup_vs_scan"]
    )
    scan_means = {}
    rows = []
    for variant in variants:
        for m in args.blocks if variant in ("mi-bst", "mih") else [1]:
            index = _bench_index(variant, params, m, args, len(ds))
            index.fit(ds)
            index_bytes = len(index_to_bytes(index))
            for tau in taus:
                total = 0.0
                answers = 0
                for qrow in qrows:
                    start = time.perf_counter()
                    ids = index.query(qrow, tau)
                    total += time.perf_counter() - start
                    answers += len(ids)
                mean_ms = total / len(qrows) * 1e3
                est = estimate_cost(params.b, params.L, tau, len(ds), m=max(m, 1),
                                    policy=args.policy)
                if variant == "scan":
                    scan_means[tau] = mean_ms
                rows.append(
                    [variant, m if variant in ("mi-bst", "mih") else "", args.policy
                     if variant in ("mi-bst", "mih") else "", tau, len(qrows),
                     mean_ms, answers / len(qrows), index_bytes,
                     est.single_cost, est.multi_cost]
                )
    for row in rows:
        tau = row[3]
        speedup = ""
        if scan_means.get(tau) and row[0] != "scan" and row[5] > 0:
            speedup = f"{scan_means[tau] / row[5]:.3g}"
        writer.writerow(row[:5] + [f"{row[5]:.6g}", f"{row[6]:.6g}", row[7],
                                   f"{row[8]:.6g}", f"{row[9]:.6g}", speedup])
    return 0


def _bench_index(variant, params, m, args, n):
    if variant == "scan":
        return LinearScanIndex(params.b)
    if variant == "sih":
        # the bench caps signature probes (fallback stays exact)
        budget = args.probe_budget if args.probe_budget is not None else 4 * n
        return SingleIndexHashing(params.b, probe_budget=budget)
    if variant == "si-bst":
        return SketchTrieIndex(params.b, lam=args.lam)
    if variant == "mi-bst":
        return MultiIndexSketchTrie(params.b, m=m, policy=args.policy, lam=args.lam)
    return MultiIndexHashing(params.b, m=m, policy=args.policy)


def run(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        return args.func(args)
    except FormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
