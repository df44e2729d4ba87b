"""Command line entry point: ``radixjoin run``, ``gen`` and ``bench``.

Exit status is 0 on success, 1 on usage or input errors and 2 when
``--verify-bound`` finds a mismatch.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
import time
from pathlib import Path
from typing import Optional, Sequence

from . import analysis
from .baseline import SizeError, brute_force_join, lftj, pairwise_hash_join
from .boolean import BitOrder, DomainOverflowError, EncodingSpec, booleanise_query, parse_boolvar
from .engine import IndexCatalog, run_plan
from .io import (
    DataError,
    bind_query,
    format_query,
    format_relation,
    load_database,
    parse_query,
    read_bundle,
    write_bundle,
)
from .planner import (
    ConfigurationError,
    VariableOrder,
    attach_schedules,
    default_index_orders,
    interleaved_variable_order,
    order_consistent_index,
    plan_for_query,
    resolve_index_orders,
    singleton_plan,
)
from .relmodel import QueryError, normalize_query

EXIT_OK, EXIT_USAGE, EXIT_VERIFY = 0, 1, 2
ENGINES = ("rtj", "grtj", "lftj", "brute", "pairwise")


class UsageError(Exception):
    pass


class _ArgParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _ArgParser(prog="radixjoin", description="Radix triejoin over bit-trie indexes.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_ArgParser)

    r = sub.add_parser("run", help="evaluate a query")
    r.add_argument("query", nargs="?", help="query file, or a bundle; stdin bundle if omitted")
    r.add_argument("data", nargs="*", help="TSV files or directories of *.tsv files")
    r.add_argument("--engine", choices=ENGINES, default="rtj")
    r.add_argument("--bit-order", choices=("lsb", "msb"), default="lsb")
    r.add_argument("--alpha", help="variable permutation, e.g. b,a,c or 1,0,2 or 'random'")
    r.add_argument("--order", help="grtj: Boolean variables (a_0,b_0,...) or variables; "
                                   "lftj: variables")
    r.add_argument("--width", type=int, help="encoding width override")
    r.add_argument("--stats", metavar="FILE", help="write run statistics as JSON")
    r.add_argument("--trace", action="store_true", help="recursion trace on stderr")
    r.add_argument("--verify-bound", action="store_true",
                   help="check per-level node counts against the subquery oracle")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--jobs", type=int, default=1)

    g = sub.add_parser("gen", help="generate an instance bundle")
    g.add_argument("kind", choices=("grid", "pairs", "bernoulli"))
    g.add_argument("--side", type=int, default=4, help="grid: values per attribute")
    g.add_argument("--count", type=int, default=1000, help="pairs: number of tuples")
    g.add_argument("--n", type=int, default=1024, help="bernoulli: number of tuples")
    g.add_argument("--arity", type=int, default=2, help="bernoulli: relation arity r")
    g.add_argument("--specified", type=int, default=1, help="bernoulli: constants s")
    g.add_argument("--width", type=int, default=32, help="bernoulli: bits per value")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", metavar="DIR", help="write query.dl and TSV files instead of a bundle")

    b = sub.add_parser("bench", help="sweep a generator and fit a scaling exponent")
    b.add_argument("kind", choices=("grid", "pairs", "bernoulli"))
    b.add_argument("--sizes", help="comma separated sizes (grid: side, pairs: count, "
                                   "bernoulli: tuples)")
    b.add_argument("--arity", type=int, default=2, help="bernoulli: relation arity r")
    b.add_argument("--specified", type=int, default=1, help="bernoulli: constants s")
    b.add_argument("--width", type=int, default=32, help="bernoulli: bits per value")
    b.add_argument("--seeds", type=int, default=1, help="bernoulli: seeds averaged per size")
    return p


# ---------------------------------------------------------------------------
# run


def _load(args, stdin) -> tuple:
    if args.query in (None, "-"):
        if args.data:
            raise UsageError("data paths need a query file")
        return read_bundle(stdin.read())
    path = Path(args.query)
    text = path.read_text(encoding="utf-8")
    if not args.data:
        if text.lstrip().startswith("%query"):
            return read_bundle(text)
        raise UsageError("no data given (pass TSV files or directories)")
    return parse_query(text), load_database(args.data)


def _parse_alpha(text: Optional[str], variables: Sequence[str], rng: random.Random):
    if text is None:
        return None
    n = len(variables)
    if text == "random":
        perm = list(range(n))
        rng.shuffle(perm)
        return perm
    toks = [t.strip() for t in text.split(",") if t.strip()]
    if all(t.isdigit() for t in toks):
        perm = [int(t) for t in toks]
    else:
        unknown = [t for t in toks if t not in variables]
        if unknown:
            raise UsageError(f"--alpha names unknown variables {unknown}")
        perm = [list(variables).index(t) for t in toks]
    if sorted(perm) != list(range(n)):
        raise UsageError(f"--alpha must be a permutation of {n} variables")
    return perm


def _check_flags(args) -> None:
    radix = args.engine in ("rtj", "grtj")
    if args.order and args.engine not in ("grtj", "lftj"):
        raise UsageError("--order applies to the grtj and lftj engines only")
    if args.alpha and args.engine in ("brute", "pairwise"):
        raise UsageError(f"--alpha has no meaning for the {args.engine} engine")
    if args.alpha and args.order:
        raise UsageError("--alpha and --order both fix the order; give one")
    for flag, on in (("--trace", args.trace), ("--verify-bound", args.verify_bound),
                     ("--jobs", args.jobs != 1)):
        if on and not radix:
            raise UsageError(f"{flag} needs the rtj or grtj engine")
    if args.jobs < 1:
        raise UsageError("--jobs must be positive")


def _grtj_order(text: str, bq, alpha) -> VariableOrder:
    if text is None:
        return interleaved_variable_order(bq.variables, bq.width, alpha)
    toks = [t.strip() for t in text.split(",") if t.strip()]
    if sorted(toks) == sorted(bq.variables):
        perm = [list(bq.variables).index(t) for t in toks]
        return interleaved_variable_order(bq.variables, bq.width, perm)
    try:
        order = VariableOrder(parse_boolvar(t) for t in toks)
    except ValueError as e:
        raise UsageError(f"--order: {e}") from None
    if sorted(order) != sorted(bq.bool_vars) or len(order) != len(bq.bool_vars):
        want = ",".join(str(v) for v in bq.bool_vars)
        raise UsageError(f"--order must list every Boolean variable once ({want})")
    return order


def _run_radix(args, q, db, spec, rng, trace):
    bq = booleanise_query(q, spec)
    alpha = _parse_alpha(args.alpha, bq.variables, rng)
    if args.engine == "rtj":
        orders = resolve_index_orders(bq, default_index_orders(bq))
        plan = plan_for_query(bq, orders, alpha)
    else:
        order = _grtj_order(args.order, bq, alpha)
        orders = [order_consistent_index(bq, i, order) for i in range(bq.m)]
        plan = attach_schedules(bq, singleton_plan(order), orders)
    results, stats = run_plan(bq, IndexCatalog(db, spec), plan, orders,
                              trace=trace, jobs=args.jobs)
    info = stats.to_dict()
    info["plan"] = plan.dump()
    report = None
    if args.verify_bound:
        profile = analysis.subquery_profile(bq, db, plan.groups, position_orders=orders)
        report = analysis.verify_instance_bound(
            stats, profile, [len(g) for g in plan.groups], analysis.plan_probe_factors(plan))
        expected = _brute_or_none(q, db)
        if expected is not None and expected != results:
            report.ok = False
            report.first_mismatch = report.first_mismatch or "results differ from brute force"
        info["verify"] = report.to_dict()
    return results, info, report


def _brute_or_none(q, db) -> Optional[set]:
    try:
        return brute_force_join(q, db)
    except SizeError:
        return None


def _run(args, stdout, stderr, stdin) -> int:
    _check_flags(args)
    q, db = _load(args, stdin)
    q, db = bind_query(q, db)
    q = normalize_query(q)
    rng = random.Random(args.seed)
    spec = EncodingSpec.for_universe(db.universe_size, BitOrder(args.bit_order), args.width)
    info: dict = {"engine": args.engine, "query": format_query(q),
                  "universe_size": db.universe_size, "width": spec.width,
                  "bit_order": args.bit_order}
    report = None
    if args.engine in ("rtj", "grtj"):
        trace = (lambda line: print(line, file=stderr)) if args.trace else None
        results, extra, report = _run_radix(args, q, db, spec, rng, trace)
        info.update(extra)
    else:
        t0 = time.perf_counter()
        if args.engine == "lftj":
            order = None
            if args.order:
                order = [t.strip() for t in args.order.split(",") if t.strip()]
            elif args.alpha:
                perm = _parse_alpha(args.alpha, q.head_vars, rng)
                order = [q.head_vars[i] for i in perm]
            if order is not None and sorted(order) != sorted(q.head_vars):
                raise UsageError("--order must be a permutation of the query variables")
            results, probes = lftj(q, db, order)
            info.update(probes.to_dict())
        elif args.engine == "brute":
            results = brute_force_join(q, db)
        else:
            results = pairwise_hash_join(q, db)
        info["solutions"] = len(results)
        info["wall_time"] = time.perf_counter() - t0
    for row in sorted(results):
        print("\t".join(str(db.decode_value(v)) for v in row), file=stdout)
    if args.stats:
        with open(args.stats, "w", encoding="utf-8") as fh:
            json.dump(info, fh, indent=2)
            fh.write("\n")
    if report is not None and not report.ok:
        print(f"radixjoin: bound verification failed: {report.first_mismatch}", file=stderr)
        return EXIT_VERIFY
    return EXIT_OK


# ---------------------------------------------------------------------------
# gen


def _gen(args, stdout) -> int:
    if args.kind == "grid":
        inst = analysis.gen_agm_grid(args.side)
    elif args.kind == "pairs":
        inst = analysis.gen_pathological_pairs(args.count)
    else:
        inst = analysis.gen_bernoulli_relation(args.n, args.arity, args.specified,
                                               args.seed, args.width)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "query.dl").write_text(format_query(inst.query) + "\n", encoding="utf-8")
        for rel in inst.db.relations.values():
            (out / f"{rel.name}.tsv").write_text(format_relation(rel, inst.db), encoding="utf-8")
    else:
        write_bundle(inst.query, inst.db, stdout)
    return EXIT_OK


# ---------------------------------------------------------------------------
# bench

BENCH_SIZES = {"grid": "2,4,8,16", "pairs": "100,1000,10000",
               "bernoulli": "1024,4096,16384,65536"}


def _bench_point(args, size: int, seed: int) -> dict:
    if args.kind == "grid":
        inst = analysis.gen_agm_grid(size)
    elif args.kind == "pairs":
        inst = analysis.gen_pathological_pairs(size)
    else:
        inst = analysis.gen_bernoulli_relation(size, args.arity, args.specified, seed, args.width)
    bq = booleanise_query(inst.query, EncodingSpec.for_universe(inst.db.universe_size))
    orders = resolve_index_orders(bq, default_index_orders(bq))
    plan = plan_for_query(bq, orders)
    results, stats = run_plan(bq, IndexCatalog(inst.db, bq.spec), plan, orders)
    row = {"N": inst.meta["N"], "solutions": len(results), "candidates": stats.total_candidates,
           "internal_nodes": stats.internal_nodes, "wall_time": stats.wall_time}
    if args.kind == "pairs":
        row["lftj_bindings"] = lftj(inst.query, inst.db)[1].bindings
    return row


def _bench(args, stdout) -> int:
    try:
        sizes = [int(t) for t in (args.sizes or BENCH_SIZES[args.kind]).split(",") if t.strip()]
    except ValueError:
        raise UsageError("--sizes must be comma separated integers") from None
    if args.seeds < 1:
        raise UsageError("--seeds must be positive")
    seeds = range(args.seeds) if args.kind == "bernoulli" else range(1)
    rows = []
    for size in sizes:
        pts = [_bench_point(args, size, seed) for seed in seeds]
        row = {k: (sum(p[k] for p in pts) / len(pts) if k != "N" else pts[0][k]) for k in pts[0]}
        rows.append(row)
    cols = list(rows[0])
    print("\t".join(cols), file=stdout)
    for row in rows:
        print("\t".join(f"{row[c]:.6g}" if isinstance(row[c], float) else str(row[c])
                        for c in cols), file=stdout)
    cost = "internal_nodes" if args.kind == "bernoulli" else "candidates"
    if len(rows) >= 4:
        slope = analysis.fit_scaling_exponent(
            [(r["N"], max(r[cost], 1)) for r in rows], noise_floor=0)
        print(f"# fitted exponent of {cost} vs N: {slope:.3f}", file=stdout)
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None, stdout=None, stderr=None, stdin=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    stdin = stdin or sys.stdin
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:  # usage errors and --help
        return e.code if isinstance(e.code, int) else EXIT_USAGE
    try:
        if args.command == "run":
            return _run(args, stdout, stderr, stdin)
        if args.command == "bench":
            return _bench(args, stdout)
        return _gen(args, stdout)
    except (UsageError, QueryError, DataError, ConfigurationError, DomainOverflowError,
            analysis.GuardError, SizeError, OSError, ValueError) as e:
        print(f"radixjoin: error: {e}", file=stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
