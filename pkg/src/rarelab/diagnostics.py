"""Ensemble studies over repeated subset-simulation runs.

Covers the estimator-quality toolkit: delta-method coefficient of variation
with cross-level correlations, moment and lognormality diagnostics with
qq-plot data, lognormal confidence intervals, and failure-mode cluster
counting for multi-mode problems.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.random import SeedSequence

from .special import phi_inv
from .sus import SusConfig, run_sus

__all__ = ["RunEnsemble", "CovReport", "NormalityReport", "run_ensemble",
           "delta_cov", "normality_report", "lognormal_ci", "count_modes",
           "single_linkage_clusters"]


@dataclass
class RunEnsemble:
    """Independent subset-simulation runs with per-run summaries."""

    estimates: np.ndarray
    per_run_levels: np.ndarray
    per_run_modes: np.ndarray
    seeds: np.ndarray
    level_estimates: list
    statuses: list
    total_evals: np.ndarray
    final_samples: list = field(default=None)

    def __len__(self):
        return len(self.estimates)

    @property
    def stalled_runs(self):
        return [i for i, s in enumerate(self.statuses) if s != "reached_zero"]


@dataclass
class CovReport:
    """Delta-method c.o.v. assembled from per-level conditional estimators."""

    per_level_cov: np.ndarray
    per_level_corr: np.ndarray
    combined_cov: float
    empirical_cov: float
    n_runs_used: int
    n_runs_excluded: int


@dataclass
class NormalityReport:
    """Moments and qq data for raw and log10-transformed estimates."""

    n: int
    n_zero_excluded: int
    mean_raw: float
    sd_raw: float
    skew_raw: float
    exkurt_raw: float
    mean_log: float
    sd_log: float
    skew_log: float
    exkurt_log: float
    qq_raw: np.ndarray
    qq_log: np.ndarray
    qq_corr_raw: float
    qq_corr_log: float


def run_ensemble(lsf, cfg, n_runs, backend=None, keep_final_samples=False):
    """Execute ``n_runs`` independent runs with seeds derived from cfg.seed.

    Stalled or level-capped runs are kept (their partial estimates count)
    and flagged in ``statuses``.  Deterministic: the same master seed
    reproduces the ensemble bit for bit.
    """
    if n_runs < 1:
        raise ValueError(f"n_runs must be >= 1, got {n_runs}")
    run_seeds = SeedSequence(cfg.seed).generate_state(n_runs, np.uint64)
    estimates = np.empty(n_runs)
    levels = np.empty(n_runs, dtype=np.int64)
    modes = np.empty(n_runs, dtype=np.int64)
    evals = np.empty(n_runs, dtype=np.int64)
    level_estimates = []
    statuses = []
    finals = [] if keep_final_samples else None
    for i, s in enumerate(run_seeds):
        cfg_i = SusConfig(n_samples=cfg.n_samples, p0=cfg.p0,
                          chain_len=cfg.chain_len,
                          proposal_spread=cfg.proposal_spread,
                          max_levels=cfg.max_levels, seed=int(s))
        res = run_sus(lsf, cfg_i, backend=backend)
        estimates[i] = res.p_hat
        levels[i] = res.n_levels
        final_pts = res.levels[-1].points if res.levels else np.empty((0, lsf.dim))
        final_vals = res.levels[-1].values if res.levels else np.empty(0)
        modes[i] = count_modes(final_pts, lsf, values=final_vals)
        evals[i] = res.total_evals
        level_estimates.append(res.conditional_estimates())
        statuses.append(res.terminated)
        if finals is not None:
            finals.append(final_pts)
    return RunEnsemble(estimates, levels, modes, run_seeds.copy(),
                       level_estimates, statuses, evals, finals)


def delta_cov(level_estimates, estimates=None):
    """Delta-method c.o.v. of the product estimator across an ensemble.

    ``level_estimates`` holds one list of per-level conditional estimates
    per run.  Runs whose level count differs from the ensemble's modal count
    are excluded from the per-level statistics (the correlation matrix needs
    aligned level indices) but reported.  The combination is

        combined_cov^2 = sum_ij cov_i * cov_j * corr_ij

    i.e. the squared form implied by var(prod)/E(prod)^2; levels with zero
    variance across runs contribute nothing.  ``empirical_cov`` is the
    direct sd/mean of the final estimates when those are supplied.
    """
    lengths = [len(le) for le in level_estimates]
    if len(lengths) < 2:
        raise ValueError("delta_cov needs at least 2 runs")
    modal = int(np.bincount(lengths).argmax())
    rows = [le for le in level_estimates if len(le) == modal]
    n_excl = len(level_estimates) - len(rows)
    if len(rows) < 2:
        raise ValueError("fewer than 2 runs share the modal level count")
    e = np.asarray(rows, dtype=np.float64)
    means = e.mean(axis=0)
    sds = e.std(axis=0, ddof=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        covs = np.where(means > 0.0, sds / means, np.inf)
    n_lvl = e.shape[1]
    corr = np.eye(n_lvl)
    for i in range(n_lvl):
        for j in range(i + 1, n_lvl):
            if sds[i] > 0.0 and sds[j] > 0.0:
                ci = np.cov(e[:, i], e[:, j], ddof=1)
                corr[i, j] = corr[j, i] = ci[0, 1] / (sds[i] * sds[j])
    active = sds > 0.0
    c = np.where(active, covs, 0.0)
    combined = float(np.sqrt(max(0.0, c @ corr @ c)))
    empirical = math.nan
    if estimates is not None:
        est = np.asarray(estimates, dtype=np.float64)
        if est.mean() > 0.0:
            empirical = float(est.std(ddof=1) / est.mean())
    return CovReport(covs, corr, combined, empirical, len(rows), n_excl)


def _moments(x):
    x = np.asarray(x, dtype=np.float64)
    m = x.mean()
    d = x - m
    m2 = np.mean(d ** 2)
    sd = x.std(ddof=1)
    if m2 == 0.0:
        return float(m), float(sd), 0.0, 0.0
    skew = float(np.mean(d ** 3) / m2 ** 1.5)
    exkurt = float(np.mean(d ** 4) / m2 ** 2 - 3.0)
    return float(m), float(sd), skew, exkurt


def _qq(x):
    x = np.sort(np.asarray(x, dtype=np.float64))
    n = len(x)
    theo = np.array([phi_inv((i + 0.5) / n) for i in range(n)])
    sd = x.std(ddof=1)
    z = (x - x.mean()) / sd if sd > 0.0 else np.zeros(n)
    corr = float(np.corrcoef(theo, z)[0, 1]) if sd > 0.0 else math.nan
    return np.column_stack([theo, z]), corr


def normality_report(ensemble, min_positive=20):
    """Four moments plus normal-qq data, raw and on the log10 scale.

    Zero (or negative) estimates cannot enter the log analysis; they are
    excluded there and counted.  Raw statistics use the full estimate list.
    """
    estimates = np.asarray(
        ensemble.estimates if isinstance(ensemble, RunEnsemble) else ensemble,
        dtype=np.float64)
    pos = estimates[estimates > 0.0]
    if len(pos) < min_positive:
        raise ValueError(
            f"need at least {min_positive} positive estimates, got {len(pos)}")
    mean_r, sd_r, skew_r, kurt_r = _moments(estimates)
    logs = np.log10(pos)
    mean_l, sd_l, skew_l, kurt_l = _moments(logs)
    qq_raw, corr_raw = _qq(estimates)
    qq_log, corr_log = _qq(logs)
    return NormalityReport(len(estimates), len(estimates) - len(pos),
                           mean_r, sd_r, skew_r, kurt_r,
                           mean_l, sd_l, skew_l, kurt_l,
                           qq_raw, qq_log, corr_raw, corr_log)


def lognormal_ci(ensemble, level=0.95, min_positive=20):
    """Confidence interval from a normal fit to the log10-estimates.

    mean +- z*sd on the log10 scale, exponentiated back; z is the standard
    normal quantile for the two-sided ``level``.
    """
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must be in (0, 1), got {level}")
    estimates = np.asarray(
        ensemble.estimates if isinstance(ensemble, RunEnsemble) else ensemble,
        dtype=np.float64)
    pos = estimates[estimates > 0.0]
    if len(pos) < min_positive:
        raise ValueError(
            f"need at least {min_positive} positive estimates, got {len(pos)}")
    logs = np.log10(pos)
    m = logs.mean()
    s = logs.std(ddof=1)
    z = phi_inv(0.5 * (1.0 + level))
    return 10.0 ** (m - z * s), 10.0 ** (m + z * s)


def count_modes(final_samples, lsf, values=None, link_distance=1.0):
    """Number of failure-mode clusters among final-level samples.

    Failure points (g < 0) are grouped by quadrant sign pattern when the
    limit state declares quadrant symmetry (exact for the product forms),
    otherwise by single-linkage clustering at ``link_distance``.  Duplicated
    points and input order do not change the count.
    """
    pts = np.asarray(final_samples, dtype=np.float64)
    if pts.size == 0:
        return 0
    if values is None:
        values = lsf.evaluate_batch(pts)
    fail = np.asarray(values) < 0.0
    pts = pts[fail]
    if len(pts) == 0:
        return 0
    if lsf.mode_rule == "quadrant":
        patterns = {tuple(p >= 0.0) for p in pts}
        return len(patterns)
    return len(single_linkage_clusters(np.unique(pts, axis=0), link_distance))


def single_linkage_clusters(pts, link_distance=1.0):
    """Group points into single-linkage clusters at the given link distance.

    Returns a list of index arrays, largest cluster first.
    """
    pts = np.asarray(pts, dtype=np.float64)
    n = len(pts)
    if n == 0:
        return []
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    d2 = link_distance * link_distance
    for i in range(n):
        for j in range(i + 1, n):
            dd = pts[i] - pts[j]
            if float(dd @ dd) <= d2:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[ri] = rj
    groups = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return sorted((np.array(g) for g in groups.values()),
                  key=len, reverse=True)
