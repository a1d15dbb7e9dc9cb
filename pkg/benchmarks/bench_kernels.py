#!/usr/bin/env python3
"""Benchmark the compiled kernel extension against the pure-Python twin.

Times the three hot paths over a fixed seeded workload: expectimax DP
builds, per-sample policy sweeps (stable matching + greedy-commit over
every realization), and a full exact coupling pass.  Results are
wall-clock medians of --repeat runs.

Usage: python benchmarks/bench_kernels.py [--instances N] [--repeat R]
"""

import argparse
import statistics
import time

from rematch import kernels
from rematch.coupling import coupling_expectations
from rematch.generators import gen_random
from rematch.model import build_tables, enumerate_samples
from rematch.rng import sub_seed

WORKLOAD_SEED = 90210


def make_workload(count):
    instances = []
    for i in range(count):
        profile = ("unit-small", "cap-small", "hyper3-small")[i % 3]
        instances.append(gen_random(profile, sub_seed(WORKLOAD_SEED, i)))
    tables = []
    for inst in instances:
        t = build_tables(inst)
        t.build_enumeration()
        tables.append(t)
    return instances, tables


def bench_dp(backend, tables):
    for t in tables:
        backend.dp_solve(t, False, True)
        backend.dp_solve(t, True, True)


def bench_traces(backend, instances, tables):
    for inst, t in zip(instances, tables):
        hyper = inst.structure.__class__.__name__ == "Hypergraph"
        for smp, prob in enumerate_samples(inst):
            if prob == 0.0:
                continue
            backend.sm_trace(t, smp.mask)
            if not hyper:
                backend.gc_trace(t, smp.mask)


def bench_coupling(instances):
    coupling_expectations.cache_clear()
    for inst in instances:
        coupling_expectations(inst)


def timed(fn, repeat):
    runs = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        runs.append(time.perf_counter() - t0)
    return statistics.median(runs)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--instances", type=int, default=30)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    instances, tables = make_workload(args.instances)
    names = kernels.available_backends()
    print(f"workload: {args.instances} instances, backends: {names}")
    rows = []
    for name in names:
        backend = kernels.get_backend(name)
        dp = timed(lambda: bench_dp(backend, tables), args.repeat)
        tr = timed(lambda: bench_traces(backend, instances, tables), args.repeat)
        kernels.set_backend(name)
        cp = timed(lambda: bench_coupling(instances), args.repeat)
        rows.append((name, dp, tr, cp))
        print(f"{name:>9}:  dp {dp * 1e3:8.1f} ms   traces {tr * 1e3:8.1f} ms   "
              f"coupling {cp * 1e3:8.1f} ms")
    if len(rows) == 2:
        base = {n: (dp, tr, cp) for n, dp, tr, cp in rows}
        py, cy = base["python"], base["compiled"]
        print(f"speedup:   dp {py[0] / cy[0]:6.1f}x   traces {py[1] / cy[1]:6.1f}x   "
              f"coupling {py[2] / cy[2]:6.1f}x")


if __name__ == "__main__":
    main()
