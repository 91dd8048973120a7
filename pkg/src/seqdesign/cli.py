"""Command-line harness: generate, optimize, evaluate, benchmark, repro-table1.

Exit codes: 0 success, 2 usage error, 3 input parse error, 4 internal solver
failure. All objective values in outputs are exact integers; timing fields
live under separate keys so seeded reruns are byte-comparable without them.
"""

from __future__ import annotations

import argparse
import csv
import json
import statistics
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .bcd import BcdConfig, RunTrace, run, select_subset
from .codegen import (
    GenerationError,
    LfsrSpec,
    generate_gold_family,
    generate_mseq,
    random_set,
    sample_best_gold_subset,
)
from .core import CorrelationTable, SequenceFileError, SequenceSet, worst_shifts
from .miqp import BnbConfig, SolverConfig, SolverError, build_subproblem, solve_subproblem

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_SOLVER = 4

FORMAT_VERSION = 1


def _json_dump(obj, path=None) -> str:
    text = json.dumps(obj, indent=2, sort_keys=True)
    if path:
        Path(path).write_text(text + "\n")
    return text


def _solver_config(args) -> SolverConfig:
    return SolverConfig(
        solver=args.solver,
        exhaustive_threshold=args.exhaustive_threshold,
        bnb=BnbConfig(
            bound=args.bound,
            node_cap=args.node_cap,
            time_cap_s=args.solve_time_cap,
        ),
    )


def _bcd_config(args, seed: int) -> BcdConfig:
    return BcdConfig(
        n_free=args.n_free,
        seed=seed,
        max_iters=args.max_iters,
        time_budget_s=args.time_budget,
        stall_col=args.stall_col,
        stall_total=args.stall_total,
        solver=_solver_config(args),
    )


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--solver", choices=("auto", "exhaustive", "bnb"), default="auto")
    p.add_argument("--bound", choices=("interval", "relaxation"), default="interval")
    p.add_argument("--exhaustive-threshold", type=int, default=16)
    p.add_argument("--node-cap", type=int, default=None,
                   help="branch-and-bound node cap per subproblem")
    p.add_argument("--solve-time-cap", type=float, default=None,
                   help="branch-and-bound wall cap per subproblem (seconds)")


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n-free", type=int, default=1, help="subset size N (1 = BiST)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-iters", type=int, default=None)
    p.add_argument("--time-budget", type=float, default=None, help="seconds")
    p.add_argument("--stall-col", type=int, default=None)
    p.add_argument("--stall-total", type=int, default=None)
    _add_solver_flags(p)


def _summary(trace: RunTrace, seqset: SequenceSet, n_free: int, elapsed: float) -> dict:
    table = CorrelationTable.build(seqset)
    return {
        "format_version": FORMAT_VERSION,
        "L": seqset.L,
        "K": seqset.K,
        "N": n_free,
        "seed": trace.seed,
        "isl_initial": trace.isl_initial,
        "isl_final": trace.isl_final,
        "psl_final": table.psl(),
        "iterations": trace.iterations,
        "status": trace.status,
        "timing": {"elapsed_s": round(elapsed, 3)},
    }


def cmd_generate(args) -> int:
    if args.family == "random":
        if args.l is None or args.k is None:
            raise ValueError("--family random requires --l and --k")
        out = random_set(args.l, args.k, args.seed)
        note = f"random L={out.L} K={out.K} seed={args.seed}"
    elif args.family == "mseq":
        if args.n is None:
            raise ValueError("--family mseq requires --n")
        if args.taps:
            taps = tuple(int(t) for t in args.taps.split(","))
            seq = generate_mseq(LfsrSpec(args.n, taps))
        else:
            seq = generate_mseq(args.n)
        out = SequenceSet(seq[:, None])
        note = f"mseq n={args.n} L={out.L}"
    elif args.family == "gold":
        if args.n is None:
            raise ValueError("--family gold requires --n")
        family = generate_gold_family(args.n)
        if args.k is None:
            out = family.codes
            note = f"gold family n={args.n}: {out.K} codes of length {out.L}"
        else:
            out, best = sample_best_gold_subset(
                family, args.k, args.samples, args.seed
            )
            note = (
                f"gold n={args.n} best-of-{args.samples} subset K={args.k}: isl={best}"
            )
    else:  # pragma: no cover - argparse restricts choices
        raise ValueError(f"unknown family {args.family}")
    out.save(args.out)
    print(f"{note} -> {args.out}")
    return EXIT_OK


def _load_initial(args) -> SequenceSet:
    if args.infile:
        return SequenceSet.load(args.infile)
    if args.l is None or args.k is None:
        raise ValueError("either --in or both --l and --k are required")
    return random_set(args.l, args.k, args.init_seed)


def cmd_optimize(args) -> int:
    if args.config:
        stored = json.loads(Path(args.config).read_text())
        for key, value in stored.items():
            if key == "format_version":
                continue
            attr = key.replace("-", "_")
            if not hasattr(args, attr):
                raise ValueError(f"unknown config key {key!r}")
            setattr(args, attr, value)
    x0 = _load_initial(args)
    t0 = time.monotonic()
    final, trace = run(x0, _bcd_config(args, args.seed))
    elapsed = time.monotonic() - t0
    prefix = Path(args.out)
    final.save(prefix.with_suffix(".txt"))
    trace.write_csv(prefix.parent / (prefix.name + "_trace.csv"))
    summary = _summary(trace, final, args.n_free, elapsed)
    _json_dump(summary, prefix.parent / (prefix.name + "_summary.json"))
    print(
        f"isl {trace.isl_initial} -> {trace.isl_final} "
        f"({trace.iterations} iterations, status {trace.status})"
    )
    return EXIT_OK


def cmd_evaluate(args) -> int:
    seqset = SequenceSet.load(args.infile)
    table = CorrelationTable.build(seqset)
    report = {
        "format_version": FORMAT_VERSION,
        "L": seqset.L,
        "K": seqset.K,
        "isl": table.isl(),
        "psl": table.psl(),
        "histogram": {str(k): v for k, v in sorted(table.correlation_histogram().items())},
        "worst_shifts": worst_shifts(table),
    }
    text = _json_dump(report, args.json)
    if not args.json:
        print(text)
    return EXIT_OK


def cmd_benchmark(args) -> int:
    lengths = [int(v) for v in args.l.split(",")]
    sizes = [int(v) for v in args.n.split(",")]
    solver_cfg = _solver_config(args)
    rows = []
    rng = np.random.default_rng(args.seed)
    for L in lengths:
        x = random_set(L, args.k, int(rng.integers(2**32)))
        table = CorrelationTable.build(x)
        for N in sizes:
            times_us = []
            nodes = []
            for _ in range(args.trials):
                i = int(rng.integers(L))
                j = int(rng.integers(args.k))
                subset = select_subset(i, j, N, L, args.k, rng)
                sub = build_subproblem(x, table, subset)
                t0 = time.monotonic()
                res = solve_subproblem(sub, solver_cfg)
                times_us.append((time.monotonic() - t0) * 1e6)
                nodes.append(res.nodes)
            rows.append(
                {
                    "L": L,
                    "K": args.k,
                    "N": N,
                    "trials": args.trials,
                    "median_micros": int(statistics.median(times_us)),
                    "median_nodes": int(statistics.median(nodes)),
                }
            )
            print(
                f"L={L} N={N}: median {rows[-1]['median_micros']} us, "
                f"median nodes {rows[-1]['median_nodes']}"
            )
    with open(args.out, "w", newline="") as fh:
        w = csv.DictWriter(
            fh, fieldnames=["L", "K", "N", "trials", "median_micros", "median_nodes"]
        )
        w.writeheader()
        w.writerows(rows)
    print(f"wrote {args.out}")
    return EXIT_OK


def _one_stage_run(payload) -> dict:
    """Worker for multi-start stages; module-level so it pickles."""
    entries, cfg_kwargs, solver_kwargs, bnb_kwargs = payload
    x0 = SequenceSet(np.array(entries, dtype=np.int64))
    cfg = BcdConfig(
        solver=SolverConfig(bnb=BnbConfig(**bnb_kwargs), **solver_kwargs),
        **cfg_kwargs,
    )
    final, trace = run(x0, cfg)
    return {
        "entries": final.entries.tolist(),
        "isl": trace.isl_final,
        "iterations": trace.iterations,
        "status": trace.status,
        "seed": trace.seed,
    }


def _run_stage(inits, cfg_kwargs, solver_kwargs, bnb_kwargs, workers: int) -> list[dict]:
    payloads = [
        (x.entries.tolist(), dict(cfg_kwargs, seed=cfg_kwargs["seed"] + idx),
         solver_kwargs, bnb_kwargs)
        for idx, x in enumerate(inits)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_one_stage_run, payloads))
    return [_one_stage_run(p) for p in payloads]


def cmd_repro_table1(args) -> int:
    """Desk-scale rerun of the Gold / single-entry / block-descent comparison."""
    outdir = Path(args.out_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    n_map = {63: 6, 127: 7, 511: 9, 1023: 10}
    if args.l not in n_map:
        raise ValueError(f"--l must be one of {sorted(n_map)}")
    K = args.k
    report: dict = {
        "format_version": FORMAT_VERSION,
        "L": args.l,
        "K": K,
        "seeds": args.seeds,
        "gold_samples": args.samples,
        "master_seed": args.seed,
    }

    t0 = time.monotonic()
    family = generate_gold_family(n_map[args.l])
    gold_best, gold_isl = sample_best_gold_subset(family, K, args.samples, args.seed)
    gold_best.save(outdir / "gold_best.txt")
    report["gold_isl"] = gold_isl
    print(f"gold best-of-{args.samples}: isl {gold_isl}")

    inits = [
        random_set(args.l, K, args.seed * 1000 + 17 * s) for s in range(args.seeds)
    ]
    bist = _run_stage(
        inits,
        dict(n_free=1, seed=args.seed, max_iters=args.bist_max_iters),
        {}, {}, args.workers,
    )
    bist_sets = [SequenceSet(np.array(r["entries"], dtype=np.int64)) for r in bist]
    for idx, (r, s) in enumerate(zip(bist, bist_sets)):
        s.save(outdir / f"bist_{idx}.txt")
    report["bist"] = [{k: r[k] for k in ("isl", "iterations", "status", "seed")} for r in bist]
    report["bist_best"] = min(r["isl"] for r in bist)
    print(f"bist best of {args.seeds}: {report['bist_best']}")

    stages = [
        (4, args.bcd4_max_iters, "exhaustive_or_auto"),
        (20, args.bcd20_max_iters, "bnb_capped"),
    ]
    for n_free, max_iters, kind in stages:
        solver_kwargs = {"solver": "auto", "exhaustive_threshold": 16}
        bnb_kwargs = {"bound": args.bound, "node_cap": args.node_cap,
                      "time_cap_s": args.solve_time_cap}
        results = _run_stage(
            bist_sets,
            dict(n_free=n_free, seed=args.seed + 500 * n_free, max_iters=max_iters),
            solver_kwargs, bnb_kwargs, args.workers,
        )
        key = f"bcd{n_free}"
        for idx, r in enumerate(results):
            SequenceSet(np.array(r["entries"], dtype=np.int64)).save(
                outdir / f"{key}_{idx}.txt"
            )
        report[key] = [
            {k: r[k] for k in ("isl", "iterations", "status", "seed")} for r in results
        ]
        report[f"{key}_best"] = min(r["isl"] for r in results)
        print(f"{key} best of {args.seeds}: {report[f'{key}_best']}")

    report["timing"] = {"elapsed_s": round(time.monotonic() - t0, 3)}
    _json_dump(report, outdir / "report.json")
    print(f"report -> {outdir / 'report.json'}")
    print(
        "summary: gold {gold_isl}  bist {bist_best}  "
        "bcd4 {bcd4_best}  bcd20 {bcd20_best}".format(**report)
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="seqdesign",
        description="Design binary +-1 spreading-code sets with low integrated sidelobe level",
    )
    parser.add_argument("--version", action="version", version=__version__)
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("generate", help="write a baseline or random sequence-set file")
    p.add_argument("--family", choices=("gold", "mseq", "random"), required=True)
    p.add_argument("--n", type=int, default=None, help="LFSR degree (gold/mseq)")
    p.add_argument("--l", type=int, default=None, help="sequence length (random)")
    p.add_argument("--k", type=int, default=None, help="number of sequences")
    p.add_argument("--samples", type=int, default=1,
                   help="random gold subsets to sample when --k is given")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--taps", default=None, help="comma-separated LFSR taps (mseq)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = subs.add_parser("optimize", help="descend from an initial sequence set")
    p.add_argument("--in", dest="infile", default=None, help="initial sequence-set file")
    p.add_argument("--l", type=int, default=None, help="random init length")
    p.add_argument("--k", type=int, default=None, help="random init count")
    p.add_argument("--init-seed", type=int, default=0, help="random init seed")
    p.add_argument("--config", default=None, help="JSON file of stored flags")
    p.add_argument("--out", required=True, help="output prefix")
    _add_run_flags(p)
    p.set_defaults(func=cmd_optimize)

    p = subs.add_parser("evaluate", help="exact ISL/PSL report for a sequence-set file")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--json", default=None, help="write the report here instead of stdout")
    p.set_defaults(func=cmd_evaluate)

    p = subs.add_parser("benchmark", help="median subproblem solve time vs subset size")
    p.add_argument("--l", default="63,127", help="comma-separated lengths")
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--n", default="1,4,8", help="comma-separated subset sizes")
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="CSV output path")
    _add_solver_flags(p)
    p.set_defaults(func=cmd_benchmark)

    p = subs.add_parser(
        "repro-table1",
        help="gold sampling, then multi-seed single-entry descent, then block descent",
    )
    p.add_argument("--l", type=int, default=63)
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--seeds", type=int, default=10)
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--bist-max-iters", type=int, default=None)
    p.add_argument("--bcd4-max-iters", type=int, default=None)
    p.add_argument("--bcd20-max-iters", type=int, default=200)
    p.add_argument("--bound", choices=("interval", "relaxation"), default="interval")
    p.add_argument("--node-cap", type=int, default=3000)
    p.add_argument("--solve-time-cap", type=float, default=None)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_repro_table1)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SequenceFileError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (ValueError, GenerationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SolverError as exc:
        print(f"internal solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
