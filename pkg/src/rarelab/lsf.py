"""Limit-state function abstraction and the benchmark catalog.

All limit states live in standard normal space (u-space); the failure domain
of a limit state g is ``{u : g(u) < 0}``.  The catalog collects the
two-dimensional benchmark problems used throughout:

====================  =========================================================
``product``           g = beta^2/2 - u1*u2 (two symmetric design points)
``abs-product``       g = beta^2/2 - |u1*u2| (four symmetric design points)
``piecewise-series``  series system of two piecewise linear components whose
                      decrease rates switch away from the design point
``pareto-tail``       elliptic limit state with the second variable spliced to
                      a Pareto upper tail above 3.5
``linear-series``     g = min(5 - u1, 4 + u2)
``logistic-series``   same zero set as linear-series, logistic reformulation
``metaball``          two rational bumps minus an offset d; the topology of
                      the safe set changes with d
``vonmises-mix``      rotationally unsymmetric limit state built from two
                      non-normalized von Mises densities with different radial
                      ramps
====================  =========================================================

Parameterized entries take keyword parameters (``beta=...``, ``d=...``).
"""

import math
import threading
from dataclasses import dataclass

import numpy as np

from . import kernels
from .special import phi_cdf

__all__ = [
    "LimitState", "TailTransform", "UnknownLsfError", "tail_to_x",
    "make_product_lsf", "make_abs_product_lsf", "make_piecewise_series_lsf",
    "make_pareto_tail_lsf", "make_linear_series_lsf",
    "make_logistic_series_lsf", "make_metaball_lsf",
    "make_vonmises_mixture_lsf", "make_lsf", "catalog_names",
    "default_tail_transform",
]


class UnknownLsfError(KeyError):
    """Raised when a catalog name does not resolve."""


class LimitState:
    """An evaluable limit-state function.

    Evaluation is pure; the only mutable state is the evaluation counter,
    which is lock-protected so concurrent callers can share an instance.
    Catalog entries carry a kernel id so sweeps can run on the compiled
    backend; generic callables always evaluate in Python.
    """

    def __init__(self, name, dim, kid=kernels.KID_GENERIC, kparams=(),
                 params=None, fn=None, gradient=None, hessian=None,
                 mode_rule="linkage"):
        if kid == kernels.KID_GENERIC and fn is None:
            raise ValueError("generic limit states need an evaluator")
        self.name = name
        self.dim = int(dim)
        self.kid = kid
        self.kparams = np.asarray(list(kparams) or [0.0], dtype=np.float64)
        self.params = dict(params or {})
        self.fn = fn
        self.gradient = gradient
        self.hessian = hessian
        self.mode_rule = mode_rule
        self._evals = 0
        self._lock = threading.Lock()

    def __repr__(self):
        return f"LimitState({self.name!r}, dim={self.dim}, params={self.params})"

    @classmethod
    def from_callable(cls, name, fn, dim, gradient=None):
        return cls(name, dim, fn=fn, gradient=gradient)

    # -- evaluation --------------------------------------------------------

    def evaluate(self, u):
        """g(u) for a single point."""
        self.add_evals(1)
        if self.kid == kernels.KID_GENERIC:
            return float(self.fn(np.asarray(u, dtype=np.float64)))
        return kernels.eval_one(self.kid, self.kparams, float(u[0]), float(u[1]))

    __call__ = evaluate

    def evaluate_batch(self, pts):
        """g on an (n, dim) array of points."""
        pts = np.ascontiguousarray(pts, dtype=np.float64)
        self.add_evals(len(pts))
        if self.kid == kernels.KID_GENERIC:
            return np.array([float(self.fn(p)) for p in pts])
        return kernels.eval_batch(self.kid, self.kparams, pts)

    def raw_eval_fn(self):
        """Uncounted scalar evaluator (for sweeps that count in bulk)."""
        if self.kid == kernels.KID_GENERIC:
            return self.fn
        kid, kp = self.kid, self.kparams
        return lambda u: kernels.pyfallback.eval_one(kid, kp, u[0], u[1])

    # -- evaluation counter --------------------------------------------------

    def add_evals(self, n):
        with self._lock:
            self._evals += n

    @property
    def eval_count(self):
        return self._evals

    def reset_eval_count(self):
        with self._lock:
            self._evals = 0


# -- Pareto tail splice ------------------------------------------------------

@dataclass(frozen=True)
class TailTransform:
    """Splice of a standard normal body to a Pareto upper tail.

    The spliced CDF is ``Phi(x)`` up to ``threshold`` and ``1 - x**exponent``
    above it; the exponent makes the CDF continuous at the splice point.
    """

    threshold: float
    exponent: float

    def __post_init__(self):
        want = math.log(phi_cdf(-self.threshold)) / math.log(self.threshold)
        if abs(self.exponent - want) > 1e-12 * abs(want):
            raise ValueError(
                f"exponent {self.exponent} breaks CDF continuity at "
                f"{self.threshold} (expected {want})")


def default_tail_transform(threshold=3.5):
    c = math.log(phi_cdf(-threshold)) / math.log(threshold)
    return TailTransform(threshold, c)


def tail_to_x(u2, transform=None):
    """Map a standard normal coordinate to the Pareto-tail variable.

    Identity below the splice threshold; above it, the inverse spliced CDF
    ``(1 - Phi(u2))**(1/c)``.  Continuous and strictly increasing; +inf once
    the normal tail underflows (u2 beyond ~38).
    """
    t = transform or _DEFAULT_TAIL
    if u2 <= t.threshold:
        return float(u2)
    p = phi_cdf(-u2)
    if p == 0.0:
        return math.inf
    return math.pow(p, 1.0 / t.exponent)


_DEFAULT_TAIL = default_tail_transform()


# -- catalog factories -------------------------------------------------------

def make_product_lsf(beta=math.sqrt(12.0)):
    """g(u) = beta^2/2 - u1*u2, design points at +-(beta/sqrt2, beta/sqrt2)."""
    if beta <= 0.0:
        raise ValueError(f"beta must be positive, got {beta!r}")
    hbs = 0.5 * beta * beta

    def grad(u):
        return np.array([-u[1], -u[0]])

    def hess(u):
        return np.array([[0.0, -1.0], [-1.0, 0.0]])

    return LimitState("product", 2, kernels.KID_PRODUCT, [hbs],
                      params={"beta": beta}, gradient=grad, hessian=hess,
                      mode_rule="quadrant")


def make_abs_product_lsf(beta=math.sqrt(30.0)):
    """g(u) = beta^2/2 - |u1*u2|, one design point per quadrant.

    Non-differentiable on the axes, so no gradient is exposed.
    """
    if beta <= 0.0:
        raise ValueError(f"beta must be positive, got {beta!r}")
    hbs = 0.5 * beta * beta
    return LimitState("abs-product", 2, kernels.KID_ABS_PRODUCT, [hbs],
                      params={"beta": beta}, mode_rule="quadrant")


def make_piecewise_series_lsf():
    """Series system of two piecewise linear components, g = min(g1, g2).

    g1 drops slowly (slope -0.1) until u1 = 3.5 and steeply after; g2 drops
    steeply until u2 = 2 and slowly after, which pulls samples away from the
    nearer design point at (4, 0).  The g2 branch condition is on u2 (the
    only variable g2 depends on); both branches are continuous at the switch.
    """
    return LimitState("piecewise-series", 2, kernels.KID_PIECEWISE)


def make_pareto_tail_lsf():
    """Elliptic limit state with a Pareto upper tail on the second variable.

    g(x) = 0.1*(52 - 1.5*x1^2 - x2^2) in the original space; x1 is standard
    normal and x2 has a Pareto tail above 3.5, composed here with the
    u-space transform :func:`tail_to_x`.
    """
    t = _DEFAULT_TAIL
    return LimitState("pareto-tail", 2, kernels.KID_PARETO,
                      [t.threshold, 1.0 / t.exponent],
                      params={"threshold": t.threshold, "exponent": t.exponent})


def make_linear_series_lsf():
    """g(u) = min(5 - u1, 4 + u2): two linear components."""
    return LimitState("linear-series", 2, kernels.KID_LINEAR)


def make_logistic_series_lsf():
    """Logistic reformulation of the linear series system.

    g(u) = min(5 - u1, 1/(1 + exp(-2*(u2 + 4))) - 0.5) has exactly the same
    zero set as ``linear-series`` but different values away from it.
    """
    return LimitState("logistic-series", 2, kernels.KID_LOGISTIC)


def make_metaball_lsf(d=5.0):
    """Two rational bumps minus the offset d.

    g = 30/(qa^2+1) + 20/(qb^2+1) - d with elliptic quadratics qa, qb
    centered at (-2, 0) and (2.5, 0.5).  The origin is safe and the far
    field fails; the number of connected components of the safe set
    {g >= 0} depends on d (they merge as d decreases through the saddle
    level of the two-bump surface).
    """
    if d <= 0.0:
        raise ValueError(f"d must be positive, got {d!r}")

    def grad(u):
        u1, u2 = float(u[0]), float(u[1])
        a = u1 + 2.0
        qa = 4.0 * (a * a) / 9.0 + (u2 * u2) / 25.0
        b1 = u1 - 2.5
        b2 = u2 - 0.5
        qb = (b1 * b1) / 4.0 + (b2 * b2) / 25.0
        fa = -60.0 * qa / (qa * qa + 1.0) ** 2
        fb = -40.0 * qb / (qb * qb + 1.0) ** 2
        return np.array([
            fa * (8.0 * a / 9.0) + fb * (b1 / 2.0),
            fa * (2.0 * u2 / 25.0) + fb * (2.0 * b2 / 25.0),
        ])

    return LimitState("metaball", 2, kernels.KID_METABALL, [d],
                      params={"d": d}, gradient=grad)


def make_vonmises_mixture_lsf():
    """Rotationally unsymmetric limit state from two von Mises lobes.

    In polar coordinates (r, phi), phi in [0, 2*pi):

        g = 0.19 - 0.0055*Phi(r - 0.5)*exp(4*cos(phi))
                 - 12*(Phi(0.004*r) - 0.5)*exp(cos(phi - pi))

    The first lobe (kappa = 4, centered at phi = 0) ramps up quickly in r and
    then saturates; the second (kappa = 1, centered at phi = pi) ramps up
    slowly but indefinitely.  The 0.0055 factor scales the first lobe only:
    scaling both would make g non-monotone along phi = 0 (rising again for
    r > ~4.5), contradicting the fast-then-slow decrease this case is built
    around.
    """
    return LimitState("vonmises-mix", 2, kernels.KID_VONMISES)


_CATALOG = {
    "product": make_product_lsf,
    "abs-product": make_abs_product_lsf,
    "piecewise-series": make_piecewise_series_lsf,
    "pareto-tail": make_pareto_tail_lsf,
    "linear-series": make_linear_series_lsf,
    "logistic-series": make_logistic_series_lsf,
    "metaball": make_metaball_lsf,
    "vonmises-mix": make_vonmises_mixture_lsf,
}

_PARAM_NAMES = {
    "product": {"beta"},
    "abs-product": {"beta"},
    "metaball": {"d"},
}


def catalog_names():
    return tuple(_CATALOG)


def make_lsf(name, params=None):
    """Build a catalog limit state by its stable name."""
    try:
        factory = _CATALOG[name]
    except KeyError:
        raise UnknownLsfError(
            f"unknown limit state {name!r}; catalog: {', '.join(_CATALOG)}"
        ) from None
    params = dict(params or {})
    allowed = _PARAM_NAMES.get(name, set())
    extra = set(params) - allowed
    if extra:
        raise ValueError(
            f"{name} does not take parameter(s) {sorted(extra)}; "
            f"allowed: {sorted(allowed) or 'none'}")
    return factory(**params)
