"""Command line: ``introdet det``, ``introdet bench`` and ``introdet verify``."""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time

from . import mcverify
from .bigmat import (
    IntMatrix,
    MatrixFormatError,
    gen_engineered,
    gen_random,
    gen_unimodular,
    parse_matrix,
    read_matrix,
)
from .introspect import ALGORITHMS, run_algorithm
from .modfield import MAX_PRIME_BITS, PrimeExhaustedError

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_EXHAUSTED = 0, 1, 2, 3
GENERATORS = ("identity", "random", "engineered", "unimodular")
SUITES = ("rank", "factors", "perturbed", "lif-gap", "bonus-gap", "all")


def generate(kind: str, n: int, lam: int = 16, seed: int = 0) -> IntMatrix:
    if n < 1:
        raise ValueError("--n must be positive")
    if kind == "identity":
        return IntMatrix.identity(n)
    if kind == "random":
        return gen_random(n, lam, seed)
    if kind == "engineered":
        return gen_engineered(n, seed)
    if kind == "unimodular":
        return gen_unimodular(n, seed)
    raise ValueError(f"unknown generator {kind!r}")


def run_stats(rep, algo: str, seed: int) -> dict:
    return {
        "n": rep.n,
        "algo": algo,
        "seed": seed,
        "path": rep.path,
        "solvings": rep.solvings,
        "primes_used": rep.primes_used,
        "K_bits": rep.K_bits,
        "det_bits": abs(rep.det).bit_length(),
        "timings_ms": {k: round(v * 1000, 3) for k, v in sorted(rep.timings.items())},
    }


def _positive_bits(text: str) -> int:
    v = int(text)
    if not 2 <= v <= MAX_PRIME_BITS - 1:
        raise argparse.ArgumentTypeError(f"prime bits must lie in [2, {MAX_PRIME_BITS - 1}]")
    return v


def _algo_options(args) -> dict:
    return {
        "seed": args.seed,
        "prime_bits": args.prime_bits,
        "i_max": args.imax,
        "i_min": args.imin,
        "adaptive_switch": args.adaptive_switch,
        "threads": args.threads,
    }


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--epsilon", type=float, default=2.0**-20, help="failure probability bound")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--imax", type=int, default=None, help="override the last bonus level")
    p.add_argument("--imin", type=int, default=2, help="first level where stabilization counts")
    p.add_argument("--adaptive-switch", action="store_true", help="stop bonus levels once LUs are cheaper per bit")
    p.add_argument("--prime-bits", type=_positive_bits, default=19, help="primes drawn from (2^b, 2^(b+1))")
    p.add_argument("--threads", type=int, default=1, help="worker threads for certified remaindering")


def cmd_det(args) -> int:
    try:
        if args.file == "-":
            A = parse_matrix(sys.stdin.read())
        elif args.file is not None:
            A = read_matrix(args.file)
        elif args.gen is not None:
            A = generate(args.gen, args.n, args.lam, args.seed)
        else:
            print("error: give a matrix file or --gen", file=sys.stderr)
            return EXIT_INPUT
        if not A.is_square:
            print(f"error: matrix is {A.rows}x{A.cols}, not square", file=sys.stderr)
            return EXIT_INPUT
    except (MatrixFormatError, OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    try:
        rep = run_algorithm(args.algo, A, args.epsilon, **_algo_options(args))
    except PrimeExhaustedError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_EXHAUSTED
    print(rep.det)
    if args.stats:
        stats = run_stats(rep, args.algo, args.seed)
        if args.stats == "-":
            print(json.dumps(stats, sort_keys=True), file=sys.stderr)
        else:
            with open(args.stats, "w") as fh:
                json.dump(stats, fh, sort_keys=True)
                fh.write("\n")
    return EXIT_OK


def cmd_bench(args) -> int:
    algos = args.algos.split(",")
    bad = [a for a in algos if a not in ALGORITHMS]
    if bad:
        print(f"error: unknown algorithm(s) {', '.join(bad)}", file=sys.stderr)
        return EXIT_INPUT
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["n", "algo", "seed", "ms", "det_bits", "solvings", "primes"])
    opts = _algo_options(args)
    try:
        for n in sorted(args.sizes):
            for seed in range(args.seed, args.seed + args.count):
                A = generate(args.gen, n, args.lam, seed)
                rows, dets = [], {}
                for algo in algos:
                    t0 = time.perf_counter()
                    rep = run_algorithm(algo, A, args.epsilon, **{**opts, "seed": seed})
                    ms = (time.perf_counter() - t0) * 1000
                    dets[algo] = rep.det
                    rows.append([n, algo, seed, f"{ms:.3f}", abs(rep.det).bit_length(), rep.solvings, rep.primes_used])
                if len(dets) == 1:
                    dets["certified-cra"] = run_algorithm("certified-cra", A, seed=seed).det
                if len(set(dets.values())) != 1:
                    print(f"error: algorithms disagree at n={n} seed={seed}: {dets}", file=sys.stderr)
                    return EXIT_FAIL
                w.writerows(rows)
                out.flush()
    except PrimeExhaustedError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_EXHAUSTED
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def verify_results(suite: str, trials: int, oracle_trials: int, seed: int, n: int | None = None, lam: int | None = None):
    """Yield the McResult records of one suite (or all of them)."""
    run_all = suite == "all"
    if run_all or suite == "rank":
        yield mcverify.mc_rank_bound(2, 2, 1, 2, 1, trials, seed, form="tight")
        for j in (5, 6, 7):
            yield mcverify.mc_rank_bound(8, 8, 2, 3, j, trials, seed + j)
    if run_all or suite == "factors":
        yield mcverify.mc_factor_count(n or 40, lam or 4, oracle_trials, seed)
        yield mcverify.mc_factor_count(n or 40, 1, oracle_trials, seed, p=2)
    if run_all or suite == "perturbed":
        for p, l, S in ((2, 3, 64), (3, 2, 100), (5, 2, 100)):
            yield mcverify.mc_perturbed_det(6, 3, S, p, l, trials, seed)
    if run_all or suite == "lif-gap":
        yield mcverify.mc_lif_gap(n or 30, "expected-O1", oracle_trials, seed)
        yield mcverify.mc_lif_gap(n or 30, "probability-1/3", oracle_trials, seed)
    if run_all or suite == "bonus-gap":
        yield mcverify.mc_bonus_gap(n or 24, oracle_trials, seed)


def cmd_verify(args) -> int:
    ok = True
    for res in verify_results(args.suite, args.trials, args.oracle_trials, args.seed, args.n, args.lam):
        print(res.to_json(), flush=True)
        ok &= res.passed
    return EXIT_OK if ok else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="introdet", description="Introspective integer determinant")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("det", help="determinant of a matrix file or generated matrix")
    p.add_argument("file", nargs="?", help="matrix text file ('-' for stdin)")
    p.add_argument("--gen", choices=GENERATORS)
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--lambda", dest="lam", type=int, default=16)
    p.add_argument("--algo", choices=ALGORITHMS, default="introspective")
    p.add_argument("--stats", metavar="PATH", help="write a RunStats JSON record ('-' for stderr)")
    p.add_argument("--format", choices=("text",), default="text")
    _add_common(p)
    p.set_defaults(func=cmd_det)

    p = sub.add_parser("bench", help="time algorithms on generated matrices, CSV output")
    p.add_argument("--sizes", type=int, nargs="+", default=[40, 80, 120, 160, 200])
    p.add_argument("--algos", default="introspective,certified-cra")
    p.add_argument("--gen", choices=GENERATORS, default="random")
    p.add_argument("--lambda", dest="lam", type=int, default=16)
    p.add_argument("--count", type=int, default=1, help="instances per size (seeds seed..seed+count-1)")
    p.add_argument("--out", help="CSV path (default stdout)")
    _add_common(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("verify", help="Monte Carlo checks of the probabilistic bounds")
    p.add_argument("suite", choices=SUITES)
    p.add_argument("--trials", type=int, default=100000, help="trials for the vectorized suites")
    p.add_argument("--oracle-trials", type=int, default=200, help="trials for suites needing Smith forms or solves")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--lambda", dest="lam", type=int, default=None)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
