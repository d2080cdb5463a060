import math

import numpy as np
import pytest

from rarelab.lsf import LimitState, make_lsf
from rarelab.sorm import (SormCurvatureError, default_starts,
                          find_beta_points, fit_asymptotic, sorm_correction,
                          sorm_total)
from rarelab.special import phi_cdf

SQRT12 = math.sqrt(12.0)
SQRT30 = math.sqrt(30.0)


class TestFindBetaPoints:
    def test_product_two_points(self):
        lsf = make_lsf("product", {"beta": SQRT12})
        pts = find_beta_points(lsf)
        assert len(pts) == 2
        a = SQRT12 / math.sqrt(2.0)
        locs = sorted(tuple(p.location.round(5)) for p in pts)
        assert locs[0] == pytest.approx((-a, -a), abs=1e-4)
        assert locs[1] == pytest.approx((a, a), abs=1e-4)
        for p in pts:
            assert p.beta == pytest.approx(SQRT12, abs=1e-6)

    def test_abs_product_four_points(self):
        lsf = make_lsf("abs-product", {"beta": SQRT30})
        pts = find_beta_points(lsf)
        assert len(pts) == 4
        quadrants = {(p.location[0] > 0, p.location[1] > 0) for p in pts}
        assert len(quadrants) == 4
        for p in pts:
            assert p.beta == pytest.approx(SQRT30, abs=1e-5)

    def test_linear_series_points(self):
        pts = find_beta_points(make_lsf("linear-series"))
        assert len(pts) == 2
        assert pts[0].beta == pytest.approx(4.0, abs=1e-6)
        assert pts[0].location == pytest.approx([0.0, -4.0], abs=1e-5)
        assert pts[1].beta == pytest.approx(5.0, abs=1e-6)
        assert pts[1].location == pytest.approx([5.0, 0.0], abs=1e-5)

    def test_kkt_conditions_hold(self):
        for name, params in (("product", {"beta": 3.0}),
                             ("metaball", {}), ("pareto-tail", {})):
            lsf = make_lsf(name, params)
            for bp in find_beta_points(lsf):
                assert abs(lsf.evaluate(bp.location)) <= 1e-8
                uhat = bp.location / np.linalg.norm(bp.location)
                nhat = bp.gradient / np.linalg.norm(bp.gradient)
                assert min(np.linalg.norm(uhat - nhat),
                           np.linalg.norm(uhat + nhat)) <= 1e-5

    def test_start_battery_shape(self):
        starts = default_starts()
        assert len(starts) == 49


class TestSormCorrection:
    def test_product_det_and_total(self):
        lsf = make_lsf("product", {"beta": SQRT12})
        pts = find_beta_points(lsf)
        total = 0.0
        for bp in pts:
            sf = sorm_correction(lsf, bp)
            assert sf.det_value == pytest.approx(2.0, abs=1e-8)
            total += sf.probability
        assert total == pytest.approx(math.sqrt(2.0) * phi_cdf(-SQRT12),
                                      rel=1e-8)

    def test_linear_form_equals_sorm(self):
        lsf = make_lsf("linear-series")
        for bp in find_beta_points(lsf):
            sf = sorm_correction(lsf, bp)
            assert sf.det_value == pytest.approx(1.0, abs=1e-9)
            assert sf.probability == pytest.approx(phi_cdf(-bp.beta),
                                                   rel=1e-9)

    def test_abs_product_total(self):
        lsf = make_lsf("abs-product", {"beta": SQRT30})
        total = sorm_total(lsf)
        assert total == pytest.approx(
            2.0 * math.sqrt(2.0) * phi_cdf(-SQRT30), rel=1e-6)

    def test_scale_invariance(self):
        lam = 7.3
        base = make_lsf("product", {"beta": 3.0})
        scaled = LimitState.from_callable(
            "scaled", lambda u: lam * (4.5 - u[0] * u[1]), 2,
            gradient=lambda u: lam * np.array([-u[1], -u[0]]))
        for lsf in (base, scaled):
            pts = find_beta_points(lsf)
            assert len(pts) == 2
            sf = sorm_correction(lsf, pts[0])
            assert pts[0].beta == pytest.approx(3.0, abs=1e-7)
            assert sf.det_value == pytest.approx(2.0, abs=1e-6)

    def test_rotation_invariance(self):
        beta = 3.0
        angle = 0.7
        c, s = math.cos(angle), math.sin(angle)
        rot = np.array([[c, -s], [s, c]])
        hbs = 0.5 * beta * beta

        def g(u):
            v = rot @ u
            return hbs - v[0] * v[1]

        def grad(u):
            v = rot @ u
            return rot.T @ np.array([-v[1], -v[0]])

        def hess(u):
            return rot.T @ np.array([[0.0, -1.0], [-1.0, 0.0]]) @ rot

        rotated = LimitState("rotated-product", 2, fn=g, gradient=grad,
                             hessian=hess)
        plain = make_lsf("product", {"beta": beta})
        bp_r = find_beta_points(rotated)
        bp_p = find_beta_points(plain)
        assert len(bp_r) == len(bp_p) == 2
        for a, b in zip(bp_r, bp_p):
            assert abs(a.beta - b.beta) <= 1e-8
            assert abs(sorm_correction(rotated, a).det_value
                       - sorm_correction(plain, b).det_value) <= 1e-8

    def test_curvature_breakdown_reported(self):
        lsf = make_lsf("pareto-tail")
        pts = find_beta_points(lsf)
        back = [bp for bp in pts if bp.location[1] < -5]
        assert back, "expected the deep lower-axis design point"
        with pytest.raises(SormCurvatureError):
            sorm_correction(lsf, back[0])

    def test_needs_converged_point(self):
        lsf = make_lsf("product", {"beta": 3.0})
        bp = find_beta_points(lsf)[0]
        bp.converged = False
        with pytest.raises(ValueError):
            sorm_correction(lsf, bp)


class TestFitAsymptotic:
    def test_exact_constant_family(self):
        betas = [2.0, 3.0, 4.0, 5.0]
        ps = [math.sqrt(2.0) * phi_cdf(-b) for b in betas]
        fit = fit_asymptotic(betas, ps)
        assert fit.c == pytest.approx(math.sqrt(2.0), abs=1e-10)
        assert abs(fit.b) <= 1e-10
        assert fit.residual <= 1e-12

    def test_exact_power_family(self):
        betas = [2.0, 3.0, 4.0, 5.0]
        ps = [3.0 * b * b * phi_cdf(-b) for b in betas]
        fit = fit_asymptotic(betas, ps)
        assert fit.c == pytest.approx(3.0, abs=1e-10)
        assert fit.b == pytest.approx(2.0, abs=1e-10)
        assert fit.residual <= 1e-12

    def test_negative_slope_clamped(self):
        betas = [2.0, 3.0, 4.0, 5.0]
        ps = [phi_cdf(-b) / b for b in betas]
        fit = fit_asymptotic(betas, ps)
        assert fit.b == 0.0
        assert fit.residual > 0.0

    def test_pinned_constant(self):
        fit = fit_asymptotic([3.0], [math.sqrt(2.0) * phi_cdf(-3.0)],
                             pin_b=True)
        assert fit.c == pytest.approx(math.sqrt(2.0), rel=1e-12)
        assert fit.b == 0.0

    def test_degenerate_inputs(self):
        with pytest.raises(ValueError):
            fit_asymptotic([3.0], [1e-3])
        with pytest.raises(ValueError):
            fit_asymptotic([3.0, 3.0], [1e-3, 1.2e-3])
        with pytest.raises(ValueError):
            fit_asymptotic([3.0, 4.0], [0.0, 0.0])
