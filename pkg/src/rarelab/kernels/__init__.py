"""Hot-kernel backends: compiled extension with pure-Python fallback.

The compiled module is optional; when it is missing (or disabled through the
``RARELAB_FORCE_FALLBACK`` environment variable) everything runs on the
pure-Python twin in :mod:`rarelab.kernels.pyfallback`.  Both backends consume
random streams in the same order and mirror each other's floating-point
expressions, so results are bit-identical either way.
"""

import os

from . import pyfallback
from .pyfallback import (KID_ABS_PRODUCT, KID_GENERIC, KID_LINEAR,
                         KID_LOGISTIC, KID_METABALL, KID_PARETO,
                         KID_PIECEWISE, KID_PRODUCT, KID_VONMISES)

if os.environ.get("RARELAB_FORCE_FALLBACK"):
    _core = None
else:
    try:
        from . import _core
    except ImportError:
        _core = None

HAVE_COMPILED = _core is not None

_BACKENDS = ("compiled", "python")


def default_backend():
    return "compiled" if HAVE_COMPILED else "python"


def resolve_backend(backend, kid):
    """Pick the backend for a kernel; generic callables always run in Python."""
    if backend is None:
        backend = default_backend()
    if backend not in _BACKENDS:
        raise ValueError(f"unknown backend {backend!r}, expected one of {_BACKENDS}")
    if backend == "compiled" and not HAVE_COMPILED:
        raise RuntimeError("compiled kernels requested but the extension is not built")
    if kid == KID_GENERIC:
        return "python"
    return backend


def eval_one(kid, params, u1, u2, backend=None):
    if resolve_backend(backend, kid) == "compiled":
        return _core.eval_one(kid, params, u1, u2)
    return pyfallback.eval_one(kid, params, u1, u2)


def eval_batch(kid, params, pts, backend=None):
    if resolve_backend(backend, kid) == "compiled":
        return _core.eval_batch(kid, params, pts)
    return pyfallback.eval_batch(kid, params, pts)


def chain_sweep(kid, params, eval_fn, seeds, seed_vals, threshold, spread,
                chain_len, bitgens, backend=None):
    """Run the per-level Metropolis sweep on the selected backend.

    ``eval_fn`` is only used on the Python path (it wraps either the generic
    callable or the scalar kernel); the compiled path dispatches on ``kid``.
    """
    if resolve_backend(backend, kid) == "compiled":
        return _core.chain_sweep(kid, params, seeds, seed_vals, threshold,
                                 spread, chain_len, bitgens)
    return pyfallback.chain_sweep(eval_fn, seeds, seed_vals, threshold,
                                  spread, chain_len, bitgens)
