"""Compiled engine vs pure-Python fallback on a few representative cases.

    python3 benchmarks/bench_kernel.py [--trials N]
"""

import argparse
import time

import numpy as np

from cachebench.catalog import expand_cases, load_default_catalog
from cachebench.config import default_machine
from cachebench.engine import HAVE_COMPILED, run_program
from cachebench.program import compile_case

CASES = (5, 41, 43, 44, 47)


def bench(backend, programs, cfg, trials):
    t0 = time.perf_counter()
    outs = [run_program(cfg, p, trials, 7, backend=backend)[0] for p in programs]
    return time.perf_counter() - t0, outs


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--trials", type=int, default=200)
    args = ap.parse_args()
    if not HAVE_COMPILED:
        raise SystemExit("compiled engine not built; run pip install -e . first")
    cfg = default_machine()
    cat = load_default_catalog()
    programs = []
    for pid in CASES:
        case = expand_cases(cat.by_id(pid))[0]
        programs += [compile_case(case, cand, cfg) for cand in ("a", "alias", "nib")]
    n = len(programs) * args.trials
    run_program(cfg, programs[0], 2, 0, backend="c")  # warm the engine cache
    tc, oc = bench("c", programs, cfg, args.trials)
    tp, op = bench("python", programs, cfg, args.trials)
    same = all(np.array_equal(a, b) for a, b in zip(oc, op))
    print(f"{n} trials per backend")
    print(f"compiled: {tc:8.3f} s  {1e6 * tc / n:8.1f} us/trial")
    print(f"python:   {tp:8.3f} s  {1e6 * tp / n:8.1f} us/trial")
    print(f"speedup:  {tp / tc:8.1f}x   identical samples: {same}")


if __name__ == "__main__":
    main()
