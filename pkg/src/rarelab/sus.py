"""Subset simulation: adaptive levels, Metropolis resampling, product estimate.

The failure probability P(g(U) < 0) is written as a product of conditional
probabilities over nested domains F_1 > F_2 > ... defined by decreasing
thresholds a_i.  Level 0 is direct Monte Carlo; each further level reseeds
from the best p0-fraction of the previous samples and refills the level with
component-wise Metropolis chains conditioned below the current threshold.
Intermediate factors equal the seed fraction p0 by construction; the final
factor is the counted failure fraction at the last level.

Level membership is boundary-inclusive ({g <= a_i}) so the seed sitting
exactly at the empirical quantile is a valid chain start; the final failure
count uses the strict {g < 0}.

Reproducibility: every chain draws from its own PCG64 substream derived from
``(seed, level, chain)``, so serial and parallel execution, and the compiled
and pure-Python backends, all produce bit-identical results.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.random import PCG64, Generator, SeedSequence

from . import kernels

__all__ = ["SusConfig", "SusConfigError", "SusLevel", "SusResult",
           "run_sus", "select_threshold", "mm_chain_step"]

REACHED_ZERO = "reached_zero"
MAX_LEVELS = "max_levels"
STALLED = "stalled"


class SusConfigError(ValueError):
    """Invalid subset-simulation configuration."""


@dataclass(frozen=True)
class SusConfig:
    """Run configuration; the defaults are the canonical 500 / 0.1 / 10 setup."""

    n_samples: int = 500
    p0: float = 0.1
    chain_len: int = 10
    proposal_spread: float = 1.0
    max_levels: int = 30
    seed: int = 0

    def n_seeds(self):
        """Seeds per level (p0 * n_samples, which must be integral)."""
        raw = self.p0 * self.n_samples
        n = int(round(raw))
        if n < 1 or abs(raw - n) > 1e-9:
            raise SusConfigError(
                f"p0 * n_samples must be a positive integer, got {raw}")
        return n

    def validate(self):
        if self.n_samples < 1:
            raise SusConfigError(f"n_samples must be >= 1, got {self.n_samples}")
        if not 0.0 < self.p0 < 1.0:
            raise SusConfigError(f"p0 must be in (0, 1), got {self.p0}")
        if self.chain_len < 1:
            raise SusConfigError(f"chain_len must be >= 1, got {self.chain_len}")
        if self.proposal_spread < 0.0:
            raise SusConfigError(
                f"proposal_spread must be >= 0, got {self.proposal_spread}")
        if self.max_levels < 1:
            raise SusConfigError(f"max_levels must be >= 1, got {self.max_levels}")
        if not 0 <= self.seed < 2 ** 64:
            raise SusConfigError(f"seed must fit in 64 bits, got {self.seed}")
        n_seeds = self.n_seeds()
        if n_seeds * self.chain_len != self.n_samples:
            raise SusConfigError(
                f"chains do not refill the level: {n_seeds} seeds * "
                f"chain_len {self.chain_len} != n_samples {self.n_samples}")
        return n_seeds


@dataclass
class SusLevel:
    """One subset level: its threshold, conditional estimate and samples.

    Intermediate levels store the chain-generated samples conditioned below
    the threshold; the terminal level (threshold 0) stores the failure
    points and has no chain acceptance rate.
    """

    index: int
    threshold: float
    conditional_estimate: float
    points: np.ndarray
    values: np.ndarray
    chain_acceptance_rate: float = math.nan


@dataclass
class SusResult:
    levels: list
    p_hat: float
    total_evals: int
    terminated: str
    seed: int = 0

    @property
    def n_levels(self):
        return len(self.levels)

    def conditional_estimates(self):
        return [lv.conditional_estimate for lv in self.levels]


def select_threshold(values, p0):
    """Adaptive level threshold: the ceil(p0*N)-th smallest value, clamped.

    Returns 0.0 when that order statistic is already non-positive (the final
    level has been reached).
    """
    values = np.asarray(values, dtype=np.float64)
    n = len(values)
    if n == 0:
        raise ValueError("select_threshold needs a nonempty value list")
    if not 0.0 < p0 < 1.0:
        raise ValueError(f"p0 must be in (0, 1), got {p0}")
    k = int(math.ceil(p0 * n - 1e-9))
    v = float(np.partition(values, k - 1)[k - 1])
    return v if v > 0.0 else 0.0


def mm_chain_step(current, lsf, threshold, spread, rng):
    """One component-wise Metropolis move conditioned on {g <= threshold}.

    Every coordinate gets an independent Gaussian proposal of scale
    ``spread`` accepted with probability min(1, phi(u'_k)/phi(u_k)); the
    assembled candidate replaces the state only if its limit-state value
    stays at or below the threshold.  ``rng`` is a numpy Generator; the step
    consumes dim normals then dim uniforms, matching the level sweeps.
    """
    u = np.asarray(current, dtype=np.float64)
    dim = len(u)
    z = rng.standard_normal(dim)
    w = rng.random(dim)
    cand = u.copy()
    changed = 0
    for k in range(dim):
        uk = u[k]
        v = uk + spread * z[k]
        delta = 0.5 * (uk * uk - v * v)
        if delta >= 0.0 or w[k] < math.exp(delta):
            cand[k] = v
            changed += 1
    if changed and lsf.evaluate(cand) <= threshold:
        return cand
    return u.copy()


def _substream(seed, level, chain):
    return PCG64(SeedSequence((seed, level, chain)))


def _terminal_level(index, points, values, n):
    fail = values < 0.0
    nf = int(np.count_nonzero(fail))
    return SusLevel(index, 0.0, nf / n, points[fail].copy(),
                    values[fail].copy()), nf / n


def run_sus(lsf, cfg, backend=None):
    """Run one subset simulation and return the full level history.

    Deterministic given ``(lsf, cfg, backend)``; the backend only selects
    the implementation (compiled or Python), not the numbers.
    """
    n_seeds = cfg.validate()
    n = cfg.n_samples
    dim = lsf.dim
    backend = kernels.resolve_backend(backend, lsf.kid)
    eval_fn = lsf.raw_eval_fn()

    gen0 = Generator(_substream(cfg.seed, 0, 0))
    points = gen0.standard_normal((n, dim))
    if lsf.kid == kernels.KID_GENERIC or backend == "python":
        values = np.array([float(eval_fn(p)) for p in points])
    else:
        values = kernels.eval_batch(lsf.kid, lsf.kparams, points, backend=backend)
    total_evals = n

    levels = []
    p_hat = 1.0
    prev_a = math.inf
    level_idx = 0
    terminated = None
    while True:
        level_idx += 1
        a = select_threshold(values, cfg.p0)
        if a == 0.0:
            lv, cond = _terminal_level(level_idx, points, values, n)
            levels.append(lv)
            p_hat *= cond
            terminated = REACHED_ZERO
            break
        if a >= prev_a:
            lv, cond = _terminal_level(level_idx, points, values, n)
            levels.append(lv)
            p_hat *= cond
            terminated = STALLED
            break
        if level_idx > cfg.max_levels:
            terminated = MAX_LEVELS
            break
        order = np.argsort(values, kind="stable")[:n_seeds]
        seeds = np.ascontiguousarray(points[order])
        seed_vals = np.ascontiguousarray(values[order])
        cond = n_seeds / n
        bitgens = [_substream(cfg.seed, level_idx, c) for c in range(n_seeds)]
        points, values, n_evals, n_prop, n_moved = kernels.chain_sweep(
            lsf.kid, lsf.kparams, eval_fn, seeds, seed_vals, a,
            cfg.proposal_spread, cfg.chain_len, bitgens, backend=backend)
        total_evals += n_evals
        levels.append(SusLevel(level_idx, a, cond, points, values,
                               n_moved / n_prop if n_prop else math.nan))
        p_hat *= cond
        prev_a = a

    lsf.add_evals(total_evals)
    return SusResult(levels, p_hat, total_evals, terminated, seed=cfg.seed)
