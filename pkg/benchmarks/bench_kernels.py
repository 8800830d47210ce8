"""Compare the compiled and pure-Python kernel backends.

    python benchmarks/bench_kernels.py [--nodes 100] [--slots 10] [--repeat 5]

Kernel timings call both modules directly on the same inputs. The end-to-end
timing runs one desk-scale scenario in a subprocess per backend, since the
backend is chosen once at import.
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from localvoting import _pykernels
from localvoting.kernels import compiled_backend
from localvoting.topology import generate_random_topology

RUN_SNIPPET = """
import time
from localvoting import BACKEND
from localvoting.config import ScenarioConfig
from localvoting.engine import run
cfg = ScenarioConfig({sched!r}, nodes=25, width=50, height=50, range=10, connections=10, seed=5)
t = time.perf_counter(); run(cfg); print(BACKEND, time.perf_counter() - t)
"""


def kernel_cases(n, S, rng):
    topo = generate_random_topology(n, n ** 0.5 * 10, n ** 0.5 * 10, 20, seed=3)
    conflict = np.ascontiguousarray(topo.conflict, dtype=np.uint8)
    X = (rng.random((n, S)) < 0.1).astype(np.uint8)
    members = np.array(sorted(topo.two_hop[0] | {0}), dtype=np.int64)
    q = rng.integers(0, 500, n)
    order = np.argsort(-q, kind="stable")
    eff = rng.integers(0, 4, n).astype(np.int64)
    cands = sorted(topo.one_hop[0])
    return {
        "block_counts": lambda m: m.block_counts(X, members),
        "free_slots": lambda m: m.free_slots(X, members, S),
        "exchange_donors": lambda m: m.exchange_donors(X, members, cands),
        "greedy_admit": lambda m: m.greedy_admit(order, conflict),
        "lqf_order": lambda m: m.lqf_order(q),
        "lyui_winners": lambda m: m.lyui_winners(eff, conflict),
    }


def bench(fn, repeat):
    n, _ = timeit.Timer(fn).autorange()
    return min(timeit.repeat(fn, number=n, repeat=repeat)) / n


def full_run(sched, pure):
    env = dict(os.environ)
    env.pop("LOCALVOTING_PURE", None)
    if pure:
        env["LOCALVOTING_PURE"] = "1"
    out = subprocess.run([sys.executable, "-c", RUN_SNIPPET.format(sched=sched)], env=env,
                         capture_output=True, text=True, check=True).stdout.split()
    return out[0], float(out[1])


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nodes", type=int, default=100)
    ap.add_argument("--slots", type=int, default=10)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--skip-runs", action="store_true", help="kernel timings only")
    args = ap.parse_args(argv)

    cmod = compiled_backend()
    if cmod is None:
        print("compiled kernels not built; only the python backend is available")
    rng = np.random.default_rng(0)
    cases = kernel_cases(args.nodes, args.slots, rng)
    print(f"{'kernel':<18}{'python us':>12}{'cython us':>12}{'speedup':>9}")
    for name, call in cases.items():
        tp = bench(lambda: call(_pykernels), args.repeat) * 1e6
        if cmod is None:
            print(f"{name:<18}{tp:>12.2f}{'-':>12}{'-':>9}")
            continue
        tc = bench(lambda: call(cmod), args.repeat) * 1e6
        print(f"{name:<18}{tp:>12.2f}{tc:>12.2f}{tp / tc:>8.1f}x")

    if args.skip_runs:
        return
    print()
    print(f"{'scenario run':<18}{'python s':>12}{'cython s':>12}{'speedup':>9}")
    for sched in ("local_voting", "lqf", "lyui"):
        _, tp = full_run(sched, pure=True)
        backend, tc = full_run(sched, pure=False)
        if backend != "cython":
            print(f"{sched:<18}{tp:>12.2f}{'-':>12}{'-':>9}")
            continue
        print(f"{sched:<18}{tp:>12.2f}{tc:>12.2f}{tp / tc:>8.1f}x")


if __name__ == "__main__":
    main()
