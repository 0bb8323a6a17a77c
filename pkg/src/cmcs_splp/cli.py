"""Command-line front end: solve, verify, bench, tune, generate, enumerate.

Exit codes: 0 success / match, 1 usage error, 2 data error, 3 verification
mismatch.  Primary outputs go to stdout or ``--output``; timings and progress
go to stderr so that reruns produce byte-identical primary output.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .cmcs import ConfigError, load_config, run_cmcs, write_config
from .components import ComponentSpec, paper_pool
from .generator import (
    WORK_PER_MS,
    TrainingParams,
    classification_report,
    count_feasible,
    count_meaningful,
    default_workers,
    enumerate_meaningful,
    generate_training_set,
    tune,
)
from .instance import InstanceFormatError, KgClass, generate_kg_instance, read_instance, write_instance
from .refdata import load_reference_file
from .solution import SolutionError, format_solution, objective_of, parse_solution

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_MISMATCH = 0, 1, 2, 3

log = logging.getLogger("cmcs_splp")


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _emit(text: str, output: str | None) -> None:
    if output and output != "-":
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def _threads(args) -> int:
    env = os.environ.get("CMCS_SPLP_THREADS")
    if env:
        return max(1, int(env))
    return args.threads or default_workers()


def _load_instance(path):
    try:
        return read_instance(path)
    except OSError as exc:
        raise DataError(f"cannot read instance {path}: {exc.strerror}") from None
    except (InstanceFormatError, ValueError) as exc:
        raise DataError(f"{path}: {exc}") from None


def _load_config(spec):
    try:
        return load_config(spec)
    except OSError as exc:
        raise DataError(f"cannot read configuration {spec}: {exc.strerror}") from None
    except ConfigError as exc:
        raise DataError(f"{spec}: {exc}") from None


def _budget(args) -> float:
    if args.budget_ms is None or args.budget_ms <= 0:
        raise UsageError("budget must be positive")
    return args.budget_ms


def random_start(m: int, rng, fraction: float = 0.1) -> list[int]:
    """``r`` distinct random sites, ``r`` uniform in ``[2, max(2, floor(fraction * m))]``."""
    r = int(rng.integers(2, max(2, int(fraction * m)), endpoint=True))
    return sorted(int(i) for i in rng.choice(m, size=r, replace=False))


@dataclass
class SolveOutcome:
    value: int
    opened: list
    iterations: int
    elapsed: float


def solve(inst, config, budget_ms, seed, restarts=1, deterministic=False) -> SolveOutcome:
    best = None
    iterations = 0
    start = time.monotonic()
    for ss in np.random.SeedSequence(seed).spawn(restarts):
        rng = np.random.default_rng(ss)
        s0 = random_start(inst.m, rng)
        if deterministic:
            res = run_cmcs(config, inst, s0, rng=rng, work_budget=int(budget_ms * WORK_PER_MS))
        else:
            res = run_cmcs(config, inst, s0, budget_ms, rng)
        iterations += res.iterations
        if best is None or res.best_value < best.best_value:
            best = res
    return SolveOutcome(best.best_value, best.best_solution.opened.tolist(), iterations,
                        time.monotonic() - start)


# ---------------------------------------------------------------------------
# Subcommands


def cmd_solve(args) -> int:
    inst = _load_instance(args.instance)
    config = _load_config(args.config)
    budget = _budget(args)
    if args.restarts < 1:
        raise UsageError("restarts must be >= 1")
    out = solve(inst, config, budget, args.seed, args.restarts, args.deterministic)
    _emit(format_solution(out.value, out.opened), args.output)
    print(
        f"{inst.name or args.instance}: value {out.value}, {len(out.opened)} open sites, "
        f"{args.restarts} restart(s), {out.iterations} iterations, {out.elapsed:.3f}s",
        file=sys.stderr,
    )
    return EXIT_OK


def cmd_verify(args) -> int:
    inst = _load_instance(args.instance)
    try:
        stated, sites = parse_solution(Path(args.solution).read_text())
    except OSError as exc:
        raise DataError(f"cannot read solution {args.solution}: {exc.strerror}") from None
    except SolutionError as exc:
        raise DataError(f"{args.solution}: {exc}") from None
    if not sites:
        raise DataError("solution opens no sites")
    bad = [s + 1 for s in sites if not 0 <= s < inst.m]
    if bad:
        raise DataError(f"site index out of range [1, {inst.m}]: {bad[0]}")
    computed = objective_of(inst, sites)
    match = stated is None or stated == computed
    status = "match" if match else "mismatch"
    if stated is None:
        status = "computed"
    print(f"instance\t{inst.name}\ncomputed\t{computed}\nstated\t{stated if stated is not None else 'n/a'}\n"
          f"open_sites\t{len(set(sites))}\nstatus\t{status}")
    return EXIT_OK if match else EXIT_MISMATCH


def _instance_files(directory: Path) -> list[Path]:
    if not directory.is_dir():
        raise DataError(f"{directory} is not a directory")
    files = sorted(p for p in directory.iterdir() if p.is_file() and not p.name.startswith("."))
    if not files:
        raise DataError(f"no instance files in {directory}")
    return files


def _bench_job(job):
    path, config_spec, budget_ms, seed, deterministic = job
    inst = read_instance(path)
    out = solve(inst, load_config(config_spec), budget_ms, seed, 1, deterministic)
    return inst.name, budget_ms, seed, out.value, out.elapsed


def cmd_bench(args) -> int:
    files = _instance_files(Path(args.directory))
    config_spec = args.config
    _load_config(config_spec)
    budgets = [float(b) for b in args.budgets.split(",")] if args.budgets else [_budget(args)]
    if any(b <= 0 for b in budgets):
        raise UsageError("budget must be positive")
    seeds = [int(s) for s in args.seeds.split(",")] if args.seeds else [args.seed]
    refs = {}
    if args.references:
        try:
            refs = load_reference_file(args.references, args.reference_source)
        except (OSError, ValueError) as exc:
            raise DataError(str(exc)) from None
    for f in files:
        _load_instance(f)
    jobs = [(str(f), config_spec, b, s, args.deterministic) for f in files for b in budgets for s in seeds]
    workers = _threads(args)
    if workers > 1 and len(jobs) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_bench_job, jobs))
    else:
        rows = [_bench_job(j) for j in jobs]
    rows.sort(key=lambda r: (r[0], r[1], r[2]))
    report = BenchReport.build(rows, refs)
    _emit(report.render(args.format), args.output)
    for name, budget, seed, value, elapsed in rows:
        print(f"{name}\tbudget={budget:g}ms\tseed={seed}\t{elapsed:.3f}s", file=sys.stderr)
    return EXIT_OK


@dataclass
class BenchReport:
    rows: list
    improved: int
    same: int
    worse: int

    @classmethod
    def build(cls, raw_rows, refs) -> "BenchReport":
        rows = []
        counts = [0, 0, 0]
        for name, budget, seed, value, _elapsed in raw_rows:
            ref = refs.get(name)
            diff = None if ref is None else value - ref
            if diff is not None:
                counts[0 if diff < 0 else 1 if diff == 0 else 2] += 1
            rows.append((name, budget, seed, value, ref, diff))
        return cls(rows, *counts)

    def render(self, fmt: str = "tsv") -> str:
        header = ("instance", "budget_ms", "seed", "best", "reference", "difference")
        body = [
            (name, f"{budget:g}", str(seed), str(value),
             "n/a" if ref is None else str(ref), "n/a" if diff is None else str(diff))
            for name, budget, seed, value, ref, diff in self.rows
        ]
        footer = [("improved", str(self.improved)), ("same", str(self.same)), ("worse", str(self.worse))]
        if fmt == "tsv":
            lines = ["\t".join(header)] + ["\t".join(r) for r in body]
            lines += [f"# {k}\t{v}" for k, v in footer]
            return "\n".join(lines) + "\n"
        widths = [max(len(r[i]) for r in [header, *body]) for i in range(len(header))]
        fmt_row = lambda r: "  ".join(c.rjust(w) if i else c.ljust(w) for i, (c, w) in enumerate(zip(r, widths)))
        lines = [fmt_row(header), "  ".join("-" * w for w in widths)]
        lines += [fmt_row(r) for r in body]
        lines.append("")
        lines += [f"{k.capitalize():>9}  {v}" for k, v in footer]
        return "\n".join(lines) + "\n"


def _pool(spec: str) -> list[ComponentSpec]:
    if spec == "paper":
        return paper_pool()
    try:
        return [ComponentSpec.parse(s) for s in spec.split(",") if s.strip()]
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_tune(args) -> int:
    pool = _pool(args.pool)
    lam = args.lam
    if lam < 2:
        raise UsageError("no meaningful configurations with fewer than two components")
    if lam > len(pool):
        raise UsageError("lambda exceeds the pool size")
    lo = args.size
    hi = args.size_max if args.size_max is not None else lo
    params = TrainingParams(count=args.tests, size_range=(lo, hi), budget_ms=_budget(args))
    try:
        params.validate()
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    tests = generate_training_set(params, args.seed)
    result = tune(pool, lam, tests, args.seed, _threads(args), args.results,
                  wall_clock=args.wall_clock)
    _emit(write_config(result.winner), args.output)
    best = min(result.scores)
    lines = [
        f"lambda\t{lam}",
        f"pool_size\t{len(pool)}",
        f"tests\t{len(tests)}",
        f"meaningful\t{result.enumerated}",
        f"second_stage\t{len(result.survivors)}",
        f"winner\t{', '.join(result.winner.names)}",
        f"winner_score\t{float(best):.6f}",
        f"elapsed_s\t{result.elapsed:.1f}",
    ]
    log_text = "\n".join(lines) + "\n"
    if args.log:
        Path(args.log).write_text(log_text)
    sys.stderr.write(log_text)
    return EXIT_OK


def cmd_generate(args) -> int:
    try:
        kg_class = KgClass.parse(args.kg_class)
        n = args.n if args.n is not None else args.m
        inst = generate_kg_instance(kg_class, args.m, n, args.symmetric, args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    _emit(write_instance(inst), args.output)
    return EXIT_OK


def cmd_enumerate(args) -> int:
    pool = _pool(args.pool)
    lam = args.lam
    if not 1 <= lam <= len(pool):
        raise UsageError("lambda must be between 1 and the pool size")
    if args.report:
        _emit(classification_report(pool, (lam,) if args.lam_only else (2, 3)) + "\n", args.output)
        return EXIT_OK
    feasible = count_feasible(len(pool), lam)
    if args.count_only:
        _emit(f"feasible {feasible}, meaningful {count_meaningful(pool, lam)}\n", args.output)
        return EXIT_OK
    chunks = [write_config(c) for c in enumerate_meaningful(pool, lam)]
    _emit("\n".join(chunks), args.output)
    print(f"feasible {feasible}, meaningful {len(chunks)}", file=sys.stderr)
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="master random seed")
    common.add_argument("--threads", type=int, default=None,
                        help="worker processes (env CMCS_SPLP_THREADS overrides)")
    common.add_argument("--budget-ms", type=float, default=None, help="time budget per run in ms")
    common.add_argument("--format", choices=("tsv", "pretty"), default="tsv")
    common.add_argument("-o", "--output", default=None, help="output file (default stdout)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="cmcs-splp", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("solve", parents=[common], help="solve one instance")
    p.add_argument("instance")
    p.add_argument("--config", default="paper-3", help="preset name or config file")
    p.add_argument("--restarts", type=int, default=1)
    p.add_argument("--deterministic", action="store_true",
                   help="convert the budget to kernel work units (machine independent)")
    p.set_defaults(func=cmd_solve, budget_ms=1000.0)

    p = sub.add_parser("verify", parents=[common], help="recompute a solution's objective")
    p.add_argument("instance")
    p.add_argument("solution")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", parents=[common], help="solve a directory of instances")
    p.add_argument("directory")
    p.add_argument("--config", default="paper-3")
    p.add_argument("--budgets", default=None, help="comma-separated budgets in ms")
    p.add_argument("--seeds", default=None, help="comma-separated seeds")
    p.add_argument("--references", default=None,
                   help="'name<TAB>value' file, or 'builtin' for the shipped KG table")
    p.add_argument("--reference-source", default=None, help="filter reference rows by source tag")
    p.add_argument("--deterministic", action="store_true")
    p.set_defaults(func=cmd_bench, budget_ms=1000.0)

    p = sub.add_parser("tune", parents=[common], help="generate the best configuration")
    p.add_argument("--pool", default="paper", help="'paper' or comma-separated component names")
    p.add_argument("--lambda", dest="lam", type=int, default=2)
    p.add_argument("--tests", type=int, default=200)
    p.add_argument("--size", type=int, default=300, help="instance size (n = m), lower bound")
    p.add_argument("--size-max", type=int, default=400)
    p.add_argument("--results", default=None, help="append-only evaluation records (resumable)")
    p.add_argument("--log", default=None)
    p.add_argument("--wall-clock", action="store_true",
                   help="spend real time instead of deterministic work units")
    p.set_defaults(func=cmd_tune, budget_ms=500.0)

    p = sub.add_parser("generate", parents=[common], help="write a random KG-style instance")
    p.add_argument("--class", dest="kg_class", default="a")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--symmetric", action="store_true")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("enumerate", parents=[common], help="count or list meaningful configurations")
    p.add_argument("--pool", default="paper")
    p.add_argument("--lambda", dest="lam", type=int, default=2)
    p.add_argument("--count-only", action="store_true")
    p.add_argument("--report", action="store_true", help="classification report for lambda 2 and 3")
    p.add_argument("--lam-only", action="store_true", help="restrict the report to --lambda")
    p.set_defaults(func=cmd_enumerate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"cmcs-splp {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"cmcs-splp {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
