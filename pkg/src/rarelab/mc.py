"""Crude Monte Carlo baseline: ground truth at desk scale.

Streaming evaluation in fixed-size chunks, so n up to 1e8 needs constant
memory.  Shares the PCG64 generator family with subset simulation, which
keeps evaluation counts comparable across estimators.
"""

import math
from dataclasses import dataclass

import numpy as np
from numpy.random import Generator, PCG64, SeedSequence

from . import kernels

__all__ = ["McResult", "run_mc"]

_CHUNK = 1 << 17


@dataclass
class McResult:
    """One crude Monte Carlo run.

    ``cov_hat`` is the binomial coefficient-of-variation estimate
    sqrt((1-p)/(p*n)); it is NaN when no failure was observed.
    """

    p_hat: float
    n: int
    n_fail: int
    cov_hat: float
    failure_points: np.ndarray

    @property
    def no_failures(self):
        return self.n_fail == 0


def run_mc(lsf, n, seed, keep_failures=0, backend=None):
    """Estimate P(g < 0) from n independent standard normal points.

    Deterministic given ``seed`` (chunking does not affect the stream).  Up
    to ``keep_failures`` failure points (the first ones encountered) are
    retained for plotting.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    backend = kernels.resolve_backend(backend, lsf.kid)
    gen = Generator(PCG64(SeedSequence((seed, 0, 0))))
    dim = lsf.dim
    n_fail = 0
    kept = []
    kept_left = int(keep_failures)
    done = 0
    while done < n:
        m = min(_CHUNK, n - done)
        pts = gen.standard_normal((m, dim))
        if lsf.kid == kernels.KID_GENERIC or backend == "python":
            vals = np.array([float(lsf.fn(p)) if lsf.kid == kernels.KID_GENERIC
                             else kernels.pyfallback.eval_one(
                                 lsf.kid, lsf.kparams, p[0], p[1])
                             for p in pts])
        else:
            vals = kernels.eval_batch(lsf.kid, lsf.kparams, pts, backend=backend)
        fail = vals < 0.0
        nf = int(np.count_nonzero(fail))
        n_fail += nf
        if kept_left > 0 and nf:
            take = pts[fail][:kept_left]
            kept.append(take)
            kept_left -= len(take)
        done += m
    lsf.add_evals(n)
    p_hat = n_fail / n
    cov = math.sqrt((1.0 - p_hat) / (p_hat * n)) if n_fail else math.nan
    failure_points = (np.concatenate(kept) if kept
                      else np.empty((0, dim)))
    return McResult(p_hat, n, n_fail, cov, failure_points)
