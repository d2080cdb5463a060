#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-Python fallback.

Measures the hot paths in isolation (batch evaluation, Metropolis chain
sweep) and one end-to-end subset-simulation workload, and verifies that
both backends return bit-identical results while timing them.

Usage: python benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import math
import time

import numpy as np
from numpy.random import PCG64, SeedSequence

from rarelab import kernels
from rarelab.kernels import pyfallback
from rarelab.lsf import make_lsf
from rarelab.sus import SusConfig, run_sus


def _time(fn, repeat):
    best = math.inf
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench_eval(lsf, n, repeat):
    pts = np.random.default_rng(0).standard_normal((n, 2))
    t_py, a = _time(lambda: pyfallback.eval_batch(lsf.kid, lsf.kparams, pts),
                    repeat)
    t_c, b = _time(lambda: kernels._core.eval_batch(lsf.kid, lsf.kparams, pts),
                   repeat)
    assert np.array_equal(a, b), "backends disagree"
    return t_py, t_c


def bench_sweep(lsf, n_seeds, chain_len, repeat):
    rng = np.random.default_rng(1)
    seeds = rng.standard_normal((n_seeds, 2)) * 0.5
    vals = pyfallback.eval_batch(lsf.kid, lsf.kparams, seeds)
    threshold = float(np.percentile(vals, 95))
    keep = vals <= threshold
    seeds, vals = seeds[keep], vals[keep]

    def bgs():
        return [PCG64(SeedSequence((12, 1, c))) for c in range(len(seeds))]

    eval_fn = lsf.raw_eval_fn()
    t_py, a = _time(lambda: pyfallback.chain_sweep(
        eval_fn, seeds, vals, threshold, 1.0, chain_len, bgs()), repeat)
    t_c, b = _time(lambda: kernels._core.chain_sweep(
        lsf.kid, lsf.kparams, seeds, vals, threshold, 1.0, chain_len, bgs()),
        repeat)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
    return t_py, t_c


def bench_run(lsf, repeat):
    cfg = SusConfig(seed=5)
    t_py, a = _time(lambda: run_sus(lsf, cfg, backend="python").p_hat, repeat)
    t_c, b = _time(lambda: run_sus(lsf, cfg, backend="compiled").p_hat, repeat)
    assert a == b, "backends disagree"
    return t_py, t_c


def row(label, t_py, t_c):
    print(f"{label:<42} {t_py * 1e3:>10.2f} {t_c * 1e3:>10.2f} "
          f"{t_py / t_c:>8.1f}x")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if not kernels.HAVE_COMPILED:
        raise SystemExit("compiled kernels are not built; nothing to compare")
    print(f"{'benchmark':<42} {'python ms':>10} {'compiled':>10} {'speedup':>9}")
    for name in ("product", "pareto-tail", "vonmises-mix"):
        lsf = make_lsf(name)
        row(f"eval_batch[{name}] n=200000",
            *bench_eval(lsf, 200000, args.repeat))
    lsf = make_lsf("product", {"beta": 3.0})
    row("chain_sweep[product] 2000 seeds x 10",
        *bench_sweep(lsf, 2100, 10, args.repeat))
    row("run_sus[product beta=3] 500/0.1/10",
        *bench_run(lsf, args.repeat))


if __name__ == "__main__":
    main()
