# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: catalog limit-state evaluation and Metropolis sweeps.

Mirrors ``pyfallback`` operation for operation.  Random numbers are pulled
from numpy bit generators through the C API in exactly the order the Python
backend consumes them, so both backends are bit-identical (the build uses
-ffp-contract=off to keep it that way).
"""

import numpy as np

cimport numpy as cnp
from cpython.pycapsule cimport PyCapsule_GetPointer
from libc.math cimport (M_PI, M_SQRT1_2, NAN, atan2, cos, erfc, exp, fabs,
                        pow, sqrt)
from numpy.random cimport bitgen_t
from numpy.random.c_distributions cimport (random_standard_normal,
                                           random_standard_uniform)

cnp.import_array()

DEF KID_PRODUCT = 1
DEF KID_ABS_PRODUCT = 2
DEF KID_PIECEWISE = 3
DEF KID_PARETO = 4
DEF KID_LINEAR = 5
DEF KID_LOGISTIC = 6
DEF KID_METABALL = 7
DEF KID_VONMISES = 8


cdef inline double _phi(double x) noexcept nogil:
    return 0.5 * erfc(-x * M_SQRT1_2)


cdef double _eval(int kid, const double* p, double u1, double u2) noexcept nogil:
    cdef double g1, g2, x2, a, qa, b1, b2, qb, r, phi, t1, t2
    if kid == KID_PRODUCT:
        return p[0] - u1 * u2
    if kid == KID_ABS_PRODUCT:
        return p[0] - fabs(u1 * u2)
    if kid == KID_PIECEWISE:
        g1 = 4.0 - u1 if u1 > 3.5 else 0.85 - 0.1 * u1
        g2 = 0.5 - 0.1 * u2 if u2 > 2.0 else 2.3 - u2
        return g1 if g1 < g2 else g2
    if kid == KID_PARETO:
        x2 = u2 if u2 <= p[0] else pow(_phi(-u2), p[1])
        return 0.1 * (52.0 - 1.5 * (u1 * u1) - x2 * x2)
    if kid == KID_LINEAR:
        g1 = 5.0 - u1
        g2 = 4.0 + u2
        return g1 if g1 < g2 else g2
    if kid == KID_LOGISTIC:
        g1 = 5.0 - u1
        g2 = 1.0 / (1.0 + exp(-2.0 * (u2 + 4.0))) - 0.5
        return g1 if g1 < g2 else g2
    if kid == KID_METABALL:
        a = u1 + 2.0
        qa = 4.0 * (a * a) / 9.0 + (u2 * u2) / 25.0
        b1 = u1 - 2.5
        b2 = u2 - 0.5
        qb = (b1 * b1) / 4.0 + (b2 * b2) / 25.0
        return 30.0 / (qa * qa + 1.0) + 20.0 / (qb * qb + 1.0) - p[0]
    if kid == KID_VONMISES:
        r = sqrt(u1 * u1 + u2 * u2)
        phi = atan2(u2, u1)
        if phi < 0.0:
            phi += 2.0 * M_PI
        t1 = _phi(r - 0.5) * exp(4.0 * cos(phi))
        t2 = 12.0 * (_phi(0.004 * r) - 0.5) * exp(cos(phi - M_PI))
        return 0.19 - 0.0055 * t1 - t2
    return NAN


def eval_one(int kid, double[::1] params, double u1, double u2):
    """Evaluate catalog kernel `kid` at the point (u1, u2)."""
    return _eval(kid, &params[0], u1, u2)


def eval_batch(int kid, double[::1] params, double[:, ::1] pts):
    """Evaluate a kernel on an (n, 2) array of points."""
    out_arr = np.empty(pts.shape[0], dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef const double* pp = &params[0]
    cdef Py_ssize_t i
    with nogil:
        for i in range(pts.shape[0]):
            out[i] = _eval(kid, pp, pts[i, 0], pts[i, 1])
    return out_arr


def chain_sweep(int kid, double[::1] params, double[:, ::1] seeds,
                double[::1] seed_vals, double threshold, double spread,
                int chain_len, list bitgens):
    """Compiled twin of ``pyfallback.chain_sweep`` for catalog kernels."""
    cdef Py_ssize_t m = seeds.shape[0]
    if seeds.shape[1] != 2:
        raise ValueError("compiled chain_sweep handles dim == 2 only")
    pts_arr = np.empty((m * chain_len, 2), dtype=np.float64)
    vals_arr = np.empty(m * chain_len, dtype=np.float64)
    cdef double[:, ::1] pts = pts_arr
    cdef double[::1] vals = vals_arr
    cdef const double* pp = &params[0]
    cdef bitgen_t* rng
    cdef Py_ssize_t c, base
    cdef int t, changed
    cdef long n_evals = 0, n_prop = 0, n_moved = 0
    cdef double ua, ub, g, za, zb, wa, wb, v, delta, gc, ca, cb
    for c in range(m):
        rng = <bitgen_t*> PyCapsule_GetPointer(bitgens[c].capsule,
                                               "BitGenerator")
        ua = seeds[c, 0]
        ub = seeds[c, 1]
        g = seed_vals[c]
        base = c * chain_len
        pts[base, 0] = ua
        pts[base, 1] = ub
        vals[base] = g
        for t in range(1, chain_len):
            za = random_standard_normal(rng)
            zb = random_standard_normal(rng)
            wa = random_standard_uniform(rng)
            wb = random_standard_uniform(rng)
            ca = ua
            cb = ub
            changed = 0
            v = ua + spread * za
            delta = 0.5 * (ua * ua - v * v)
            if delta >= 0.0 or wa < exp(delta):
                ca = v
                changed += 1
            v = ub + spread * zb
            delta = 0.5 * (ub * ub - v * v)
            if delta >= 0.0 or wb < exp(delta):
                cb = v
                changed += 1
            n_prop += 2
            if changed:
                gc = _eval(kid, pp, ca, cb)
                n_evals += 1
                if gc <= threshold:
                    ua = ca
                    ub = cb
                    g = gc
                    n_moved += changed
            pts[base + t, 0] = ua
            pts[base + t, 1] = ub
            vals[base + t] = g
    return pts_arr, vals_arr, n_evals, n_prop, n_moved
