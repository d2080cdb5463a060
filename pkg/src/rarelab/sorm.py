"""Geometric reliability analysis: design points, curvature corrections, fits.

* :func:`find_beta_points` -- multi-start damped HL-RF search for local
  minimal-distance points on the limit-state surface {g = 0}.
* :func:`sorm_correction` -- second-order probability correction at a design
  point from the projected Hessian determinant.
* :func:`fit_asymptotic` -- least-squares fit of the tail family
  ``P(beta) ~ c * beta^b * Phi(-beta)`` with nonnegative c, b.
"""

import math
from dataclasses import dataclass

import numpy as np

from .special import phi_cdf

__all__ = ["BetaPoint", "SormFactor", "AsymptoticFit", "SormCurvatureError",
           "find_beta_points", "sorm_correction", "sorm_total",
           "fit_asymptotic", "default_starts", "fd_gradient", "fd_hessian"]


class SormCurvatureError(RuntimeError):
    """The projected-Hessian determinant is non-positive."""


@dataclass
class BetaPoint:
    """A local minimal-distance point on the limit-state surface."""

    location: np.ndarray
    beta: float
    gradient: np.ndarray
    converged: bool

    @property
    def form_probability(self):
        return phi_cdf(-self.beta)


@dataclass
class SormFactor:
    """Second-order correction at one design point.

    ``probability`` is this point's contribution Phi(-beta)/sqrt(det);
    contributions from all design points add up to the SORM estimate.
    """

    det_value: float
    correction: float
    probability: float
    beta: float


@dataclass
class AsymptoticFit:
    """Fitted tail family P(beta) = c * beta^b * Phi(-beta), c, b >= 0."""

    c: float
    b: float
    residual: float


def fd_gradient(fn, u, step=1e-6):
    """Central finite-difference gradient."""
    u = np.asarray(u, dtype=np.float64)
    g = np.empty(len(u))
    for k in range(len(u)):
        h = step * max(1.0, abs(u[k]))
        e = np.zeros(len(u))
        e[k] = h
        g[k] = (fn(u + e) - fn(u - e)) / (2.0 * h)
    return g


def fd_hessian(fn, u, step=1e-4):
    """Central finite-difference Hessian."""
    u = np.asarray(u, dtype=np.float64)
    n = len(u)
    h = np.empty((n, n))
    for i in range(n):
        ei = np.zeros(n)
        ei[i] = step
        h[i, i] = (fn(u + ei) - 2.0 * fn(u) + fn(u - ei)) / step ** 2
        for j in range(i + 1, n):
            ej = np.zeros(n)
            ej[j] = step
            hij = (fn(u + ei + ej) - fn(u + ei - ej)
                   - fn(u - ei + ej) + fn(u - ei - ej)) / (4.0 * step ** 2)
            h[i, j] = h[j, i] = hij
    return h


def default_starts(dim=2, radii=(2.0, 5.0, 8.0), n_directions=16):
    """Start battery: compass directions at several radii plus a nudge.

    Enough starts to find all four symmetric design points of the
    absolute-product problem reliably.
    """
    if dim != 2:
        raise ValueError("default start battery is two-dimensional")
    starts = [np.array([0.08, 0.06])]
    for r in radii:
        for j in range(n_directions):
            a = 2.0 * math.pi * j / n_directions
            starts.append(np.array([r * math.cos(a), r * math.sin(a)]))
    return starts


def _gradient_fn(lsf):
    if lsf.gradient is not None:
        return lsf.gradient
    return lambda u: fd_gradient(lsf.evaluate, u)


def find_beta_points(lsf, starts=None, g_tol=1e-8, kkt_tol=1e-5,
                     cluster_tol=1e-3, max_iter=200):
    """Locate distinct design points by damped HL-RF from multiple starts.

    Each start runs the sequential-linearization iteration

        u_next = (grad.u - g) / |grad|^2 * grad

    with backtracking on the merit function |u|^2/2 + c|g(u)|.  Converged
    points (|g| <= g_tol and u collinear with the surface normal within
    kkt_tol) are deduplicated within ``cluster_tol`` and returned sorted by
    beta.  Starts that fail to converge are skipped.
    """
    grad_fn = _gradient_fn(lsf)
    if starts is None:
        starts = default_starts(lsf.dim)
    found = []
    for u0 in starts:
        bp = _hlrf(lsf.evaluate, grad_fn, np.asarray(u0, dtype=np.float64),
                   g_tol, kkt_tol, max_iter)
        if bp is not None:
            found.append(bp)
    found.sort(key=lambda b: b.beta)
    distinct = []
    for bp in found:
        if all(np.linalg.norm(bp.location - d.location) > cluster_tol
               for d in distinct):
            distinct.append(bp)
    return distinct


def _merit(fn, u, c):
    return 0.5 * float(u @ u) + c * abs(fn(u))


def _hlrf(fn, grad_fn, u, g_tol, kkt_tol, max_iter):
    for _ in range(max_iter):
        g = float(fn(u))
        grad = np.asarray(grad_fn(u), dtype=np.float64)
        gnorm = float(np.linalg.norm(grad))
        if not np.isfinite(g) or gnorm < 1e-14 or not np.all(np.isfinite(grad)):
            return None
        beta = float(np.linalg.norm(u))
        if abs(g) <= g_tol and beta > 1e-12:
            uhat = u / beta
            nhat = grad / gnorm
            if min(np.linalg.norm(uhat - nhat),
                   np.linalg.norm(uhat + nhat)) <= kkt_tol:
                return BetaPoint(u.copy(), beta, grad, True)
        target = ((grad @ u - g) / (gnorm * gnorm)) * grad
        step = target - u
        c = 2.0 * beta / gnorm + 10.0
        m0 = _merit(fn, u, c)
        lam = 1.0
        accepted = None
        for _ in range(25):
            trial = u + lam * step
            if _merit(fn, trial, c) < m0:
                accepted = trial
                break
            lam *= 0.5
        u = accepted if accepted is not None else target
    return None


def sorm_correction(lsf, bp, hessian_step=1e-4):
    """Second-order probability correction at a converged design point.

    Builds the projector P = n n^T onto the unit normal, the scaled Hessian
    H = I + beta/|grad| * hess(g), and corrects the first-order probability
    by 1/sqrt(det((I-P) H (I-P) + P)).  The Hessian is analytic when the
    limit state provides one, otherwise central differences on the locally
    active branch; for a locally linear g the determinant is 1 and FORM
    equals SORM.  The scaling by beta/|grad| makes the correction invariant
    under positive rescaling of g.

    Raises :class:`SormCurvatureError` if the determinant is non-positive.
    """
    if not bp.converged:
        raise ValueError("sorm_correction needs a converged beta point")
    u = bp.location
    grad = np.asarray(bp.gradient, dtype=np.float64)
    gnorm = float(np.linalg.norm(grad))
    # orient the normal toward the failure domain (g decreases into it)
    n = -grad / gnorm
    dim = len(u)
    proj = np.outer(n, n)
    if getattr(lsf, "hessian", None) is not None:
        hess = np.asarray(lsf.hessian(u), dtype=np.float64)
    else:
        hess = fd_hessian(lsf.evaluate, u, step=hessian_step)
    h_tilde = np.eye(dim) + (bp.beta / gnorm) * hess
    ip = np.eye(dim) - proj
    m = ip @ h_tilde @ ip + proj
    det = float(np.linalg.det(m))
    if det <= 0.0:
        raise SormCurvatureError(
            f"projected Hessian determinant {det} <= 0 at beta point "
            f"{u.tolist()} (second-order approximation breaks down)")
    correction = 1.0 / math.sqrt(det)
    return SormFactor(det, correction, phi_cdf(-bp.beta) * correction, bp.beta)


def sorm_total(lsf, beta_points=None, **kwargs):
    """Sum of per-point SORM contributions over all design points."""
    if beta_points is None:
        beta_points = find_beta_points(lsf, **kwargs)
    return sum(sorm_correction(lsf, bp).probability for bp in beta_points)


def fit_asymptotic(betas, p_estimates, pin_b=False):
    """Fit log(p) - log(Phi(-beta)) = log(c) + b*log(beta) by least squares.

    The slope is clamped at zero (refit with b = 0) if the unconstrained fit
    gives a negative b.  Estimates with p <= 0 are dropped; at least two
    distinct betas are required (one if ``pin_b``).
    """
    betas = np.asarray(betas, dtype=np.float64)
    ps = np.asarray(p_estimates, dtype=np.float64)
    if len(betas) != len(ps):
        raise ValueError("betas and p_estimates must have equal length")
    keep = ps > 0.0
    betas, ps = betas[keep], ps[keep]
    if np.any(betas <= 0.0):
        raise ValueError("betas must be positive")
    need = 1 if pin_b else 2
    if len(betas) < need:
        raise ValueError(f"need at least {need} positive estimates, "
                         f"got {len(betas)}")
    if not pin_b and np.unique(betas).size < 2:
        raise ValueError("all betas equal: slope is unidentifiable "
                         "(pin b to fit the constant alone)")
    y = np.array([math.log(p) - math.log(phi_cdf(-b))
                  for b, p in zip(betas, ps)])
    logb = np.log(betas)
    if pin_b:
        b = 0.0
        intercept = float(np.mean(y))
    else:
        x = np.column_stack([np.ones_like(logb), logb])
        coef, *_ = np.linalg.lstsq(x, y, rcond=None)
        intercept, b = float(coef[0]), float(coef[1])
        if b < 0.0:
            b = 0.0
            intercept = float(np.mean(y))
    resid = y - (intercept + b * logb)
    return AsymptoticFit(math.exp(intercept), b,
                         float(np.sqrt(np.mean(resid ** 2))))
