"""Pure-Python kernels: limit-state evaluation and Markov-chain sweeps.

This is the fallback backend used when the compiled extension is not
available, and the reference semantics for it.  The compiled kernels mirror
these expressions operation for operation (same libm calls, same evaluation
order, no FMA contraction), so both backends produce bit-identical streams
from the same bit generators.
"""

import math

import numpy as np

KID_GENERIC = 0
KID_PRODUCT = 1
KID_ABS_PRODUCT = 2
KID_PIECEWISE = 3
KID_PARETO = 4
KID_LINEAR = 5
KID_LOGISTIC = 6
KID_METABALL = 7
KID_VONMISES = 8

_INV_SQRT2 = math.sqrt(0.5)
_TWO_PI = 2.0 * math.pi


def _phi(x):
    return 0.5 * math.erfc(-x * _INV_SQRT2)


def eval_one(kid, params, u1, u2):
    """Evaluate catalog kernel `kid` at the point (u1, u2)."""
    if kid == KID_PRODUCT:
        return params[0] - u1 * u2
    if kid == KID_ABS_PRODUCT:
        return params[0] - abs(u1 * u2)
    if kid == KID_PIECEWISE:
        g1 = 4.0 - u1 if u1 > 3.5 else 0.85 - 0.1 * u1
        g2 = 0.5 - 0.1 * u2 if u2 > 2.0 else 2.3 - u2
        return g1 if g1 < g2 else g2
    if kid == KID_PARETO:
        if u2 <= params[0]:
            x2 = u2
        else:
            t = _phi(-u2)
            # t underflows to 0 around u2 ~ 38; C pow(0, negative) is +inf
            x2 = math.pow(t, params[1]) if t > 0.0 else math.inf
        return 0.1 * (52.0 - 1.5 * (u1 * u1) - x2 * x2)
    if kid == KID_LINEAR:
        g1 = 5.0 - u1
        g2 = 4.0 + u2
        return g1 if g1 < g2 else g2
    if kid == KID_LOGISTIC:
        g1 = 5.0 - u1
        g2 = 1.0 / (1.0 + math.exp(-2.0 * (u2 + 4.0))) - 0.5
        return g1 if g1 < g2 else g2
    if kid == KID_METABALL:
        a = u1 + 2.0
        qa = 4.0 * (a * a) / 9.0 + (u2 * u2) / 25.0
        b1 = u1 - 2.5
        b2 = u2 - 0.5
        qb = (b1 * b1) / 4.0 + (b2 * b2) / 25.0
        return 30.0 / (qa * qa + 1.0) + 20.0 / (qb * qb + 1.0) - params[0]
    if kid == KID_VONMISES:
        r = math.sqrt(u1 * u1 + u2 * u2)
        phi = math.atan2(u2, u1)
        if phi < 0.0:
            phi += _TWO_PI
        t1 = _phi(r - 0.5) * math.exp(4.0 * math.cos(phi))
        t2 = 12.0 * (_phi(0.004 * r) - 0.5) * math.exp(math.cos(phi - math.pi))
        return 0.19 - 0.0055 * t1 - t2
    raise ValueError(f"unknown kernel id {kid}")


def eval_batch(kid, params, pts):
    """Evaluate a kernel on an (n, 2) array of points."""
    out = np.empty(len(pts))
    for i, p in enumerate(pts):
        out[i] = eval_one(kid, params, p[0], p[1])
    return out


def chain_sweep(eval_fn, seeds, seed_vals, threshold, spread, chain_len,
                bitgens):
    """Grow one component-wise Metropolis chain from every seed.

    Each chain contributes ``chain_len`` states (the seed counts as the
    first).  Per step, every coordinate gets an independent Gaussian
    proposal accepted with probability ``min(1, phi(u'_k)/phi(u_k))``; the
    assembled candidate is then kept only if its limit-state value stays at
    or below ``threshold``.  The candidate is only evaluated when at least
    one coordinate actually moved.

    Draw protocol per step: ``dim`` standard normals, then ``dim`` uniforms,
    from the chain's own bit generator.

    Returns ``(points, values, n_evals, n_proposed, n_moved)`` where the
    move counters are per coordinate.
    """
    seeds = np.asarray(seeds, dtype=np.float64)
    m, dim = seeds.shape
    pts = np.empty((m * chain_len, dim))
    vals = np.empty(m * chain_len)
    n_evals = 0
    n_prop = 0
    n_moved = 0
    for c in range(m):
        gen = np.random.Generator(bitgens[c])
        u = seeds[c].copy()
        g = float(seed_vals[c])
        base = c * chain_len
        pts[base] = u
        vals[base] = g
        for t in range(1, chain_len):
            z = gen.standard_normal(dim)
            w = gen.random(dim)
            cand = u.copy()
            changed = 0
            for k in range(dim):
                uk = u[k]
                v = uk + spread * z[k]
                delta = 0.5 * (uk * uk - v * v)
                if delta >= 0.0 or w[k] < math.exp(delta):
                    cand[k] = v
                    changed += 1
            n_prop += dim
            if changed:
                gc = float(eval_fn(cand))
                n_evals += 1
                if gc <= threshold:
                    u = cand
                    g = gc
                    n_moved += changed
            pts[base + t] = u
            vals[base + t] = g
    return pts, vals, n_evals, n_prop, n_moved
