#!/usr/bin/env python3
"""Benchmark the compiled slot kernel against the pure-Python fallback.

Runs the same seeded workload on every available backend, checks the outputs
are bit-identical, and prints slots/second plus the speedup.

    python3 benchmarks/bench_kernels.py [--slots N] [--n USERS] [--mode MODE]
"""

import argparse
import sys
import time

import numpy as np

from fdrelay import NetworkParams, build_success_table
from fdrelay.sim import MODE_PROBABILITY, MODE_SINR, available_backends, get_kernel

MODE_IDS = {MODE_PROBABILITY: 0, MODE_SINR: 1}


def run(backend, params, mode_id, slots, seed):
    table = build_success_table(params)
    si_mean = params.g * params.v_0 * params.h_0 * params.r_0 ** params.alpha
    gen = np.random.Generator(np.random.PCG64(seed))
    kernel = get_kernel(backend)
    start = time.perf_counter()
    out = kernel.run_slots(
        params.n, params.q_vec, params.q0, mode_id,
        table.p_d, table.p_0, table.p_0d,
        params.v_d * params.h_d, params.v_0 * params.h_0,
        params.v_0d * params.h_0d, si_mean,
        params.eta_d, params.eta_0, params.gamma_d, params.gamma_0,
        slots, slots // 10, 32, gen,
    )
    return out, time.perf_counter() - start


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--slots", type=int, default=500_000)
    ap.add_argument("--n", type=int, default=10)
    ap.add_argument("--mode", choices=list(MODE_IDS), default=MODE_PROBABILITY)
    ap.add_argument("--seed", type=int, default=2024)
    args = ap.parse_args()

    params = NetworkParams(n=args.n, gamma_0=0.6, gamma_d=0.6, g=1e-8, q0=0.99)
    backends = available_backends()
    print(f"backends: {', '.join(backends)}  (slots={args.slots}, n={args.n}, mode={args.mode})")

    results = {}
    for backend in backends:
        out, elapsed = run(backend, params, MODE_IDS[args.mode], args.slots, args.seed)
        results[backend] = (out, elapsed)
        print(f"  {backend:>7}: {elapsed:8.3f} s   {args.slots / elapsed:12,.0f} slots/s")

    if len(results) == 2:
        (ref, t_ref), (alt, t_alt) = results["cython"], results["python"]
        identical = all(np.array_equal(ref[k], alt[k]) for k in ref)
        print(f"  outputs bit-identical: {identical}")
        print(f"  speedup: {t_alt / t_ref:.1f}x")
        if not identical:
            return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
