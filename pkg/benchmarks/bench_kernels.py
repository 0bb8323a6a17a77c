"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py --size 750 --open 20 --repeat 100

Also reports how many work units one millisecond buys on this machine, which
is what ``WORK_PER_MS`` approximates.
"""

import argparse
import statistics
import time

import numpy as np

from cmcs_splp import kernels
from cmcs_splp.cmcs import preset, run_cmcs
from cmcs_splp.generator import WORK_PER_MS
from cmcs_splp.instance import generate_kg_instance
from cmcs_splp.solution import init_solution


def median_us(fn, args, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t)
    return statistics.median(times) * 1e6


def kernel_args(inst, state, name):
    F, C, R = inst.fixed, inst.costs, inst.ranks
    y, p, q = state.y, state.p, state.q
    s = int(state.opened[0])
    return {
        "open_best": (F, C, R.order, R.cost, R.rank, y, p),
        "open_best_naive": (F, C, y, p),
        "close_best": (F, C, y, p, q),
        "exchange_best": (F, C, R.order, R.cost, R.rank, y, p, q),
        "exchange_fixed": (F, C, R.order, R.cost, R.rank, y, p, q, s),
    }[name]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=750)
    ap.add_argument("--kg-class", default="b")
    ap.add_argument("--open", type=int, default=20, help="open sites in the probe solution")
    ap.add_argument("--repeat", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--calibrate-ms", type=float, default=1000.0)
    args = ap.parse_args(argv)

    inst = generate_kg_instance(args.kg_class, args.size, args.size, seed=args.seed)
    rng = np.random.default_rng(args.seed)
    opened = rng.choice(inst.m, size=args.open, replace=False)
    backends = kernels.available()
    names = ["open_best", "open_best_naive", "close_best", "exchange_best", "exchange_fixed"]

    print(f"instance {inst.name}, |P| = {args.open}, median of {args.repeat} calls (microseconds)")
    print(f"{'kernel':<18}" + "".join(f"{b:>12}" for b in backends) + f"{'ratio':>10}")
    timings = {}
    for name in names:
        row = {}
        for bname, be in backends.items():
            state = init_solution(inst, opened, backend=be)
            row[bname] = median_us(getattr(be, name), kernel_args(inst, state, name), args.repeat)
        timings[name] = row
        ratio = row["python"] / row["compiled"] if "compiled" in row else float("nan")
        print(f"{name:<18}" + "".join(f"{row[b]:>12.1f}" for b in backends) + f"{ratio:>9.1f}x")
    for bname in backends:
        speedup = timings["open_best_naive"][bname] / timings["open_best"][bname]
        print(f"rank-bounded open_best vs full rescan ({bname}): {speedup:.1f}x")

    cfg = preset("paper-3")
    for bname, be in backends.items():
        res = run_cmcs(cfg, inst, sorted(opened.tolist()), args.calibrate_ms, rng=args.seed, backend=be)
        per_ms = res.work / (res.elapsed * 1000)
        print(f"paper-3 on {bname}: {res.iterations} iterations, {per_ms:,.0f} work units/ms "
              f"(WORK_PER_MS = {WORK_PER_MS:,})")


if __name__ == "__main__":
    main()
