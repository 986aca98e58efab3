import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from extremal_harnack.counterexample import (
    Cutoff,
    GridSpec,
    OUTER_RESIDUAL_TOL,
    coefficient_residuals,
    evaluate,
    harnack_blowup,
    inequality_check,
    interface_mismatch,
    k_sweep,
    make_params,
)
from extremal_harnack.errors import DomainError, NotFound
from extremal_harnack.pucci import pucci_minus_batch

SMALL = GridSpec(n=32)


class TestParams:
    def test_eps_one_k16(self):
        p = make_params(1.0, 16)
        assert p.q == 4.0 and p.r == 1 / 16
        # hand arithmetic in exact rationals: (8 + 24 + 16) / (8 * 16) * 16^4
        a = Fraction(8 + 24 + 16, 8 * 16) * 16 ** 4
        assert a == 24576
        assert p.coef_a == float(a)
        assert p.coef_d == float(Fraction(16 ** 4, 16))

    def test_eps_two_k4(self):
        p = make_params(2.0, 4)
        assert p.q == 2.0 and p.r == 1 / 16

    @pytest.mark.parametrize("eps0,k", [(0.5, 2), (1.0, 1), (0.0, 4), (1.0, 2.5)])
    def test_rejects(self, eps0, k):
        with pytest.raises(DomainError):
            make_params(eps0, k)

    @pytest.mark.parametrize("eps0", [0.5, 1.0, 2.0])
    @pytest.mark.parametrize("k", [4, 256, 2 ** 20])
    def test_gluing_system(self, eps0, k):
        if k ** -eps0 > 0.5:
            pytest.skip("r > 1/2")
        res = coefficient_residuals(make_params(eps0, k))
        assert max(res.values()) <= 1e-12

    @pytest.mark.parametrize("eps0,k", [(0.5, 2 ** 10), (1.0, 16), (1.0, 2 ** 20)])
    def test_interface(self, eps0, k):
        gap = interface_mismatch(make_params(eps0, k))
        assert max(gap.values()) <= 1e-9


class TestCutoff:
    def test_plateaus(self):
        c = Cutoff(0.1)
        np.testing.assert_array_equal(c([0.0, 0.02, 0.05]), 1.0)
        np.testing.assert_array_equal(c([0.096, 0.0999]), 0.0)

    def test_monotone(self):
        c = Cutoff(1.0)
        s = np.linspace(0, 1, 2001)
        assert np.all(np.diff(c(s)) <= 0)

    def test_derivatives_match_differences(self):
        c = Cutoff(1.0)
        s = np.linspace(0.52, 0.93, 41)
        h = 1e-6
        r0, r1, r2 = c.derivatives(s)
        fd1 = (c(s + h) - c(s - h)) / (2 * h)
        fd2 = (c(s + h) - 2 * r0 + c(s - h)) / h ** 2
        np.testing.assert_allclose(r1, fd1, atol=1e-6)
        np.testing.assert_allclose(r2, fd2, atol=1e-3)


class TestEvaluate:
    def test_outer_formula(self):
        p = make_params(1.0, 16)
        v, g, h = evaluate(p, [1.0, 0.0, 0.3])
        assert v == 1 / 16
        np.testing.assert_allclose(g, [-4 / 16, 0, 0])

    def test_branch_arg(self):
        with pytest.raises(ValueError):
            evaluate(make_params(1.0, 16), [0.0, 0.0, 0.0], branch="middle")

    @settings(max_examples=40, deadline=None)
    @given(st.floats(0.0, 1.9), st.floats(0, 2 * math.pi), st.floats(-1.5, 1.5))
    def test_derivatives_by_differences(self, rad, ang, z):
        p = make_params(1.0, 16)
        rad = rad * p.r if rad < 1 else p.r + (rad - 1) * 1.5
        # stay clear of the interface and the cutoff kinks
        if abs(rad - p.r) < 1e-3 * p.r:
            return
        x = np.array([rad * math.cos(ang), rad * math.sin(ang), z])
        v, g, hs = evaluate(p, x)
        step = 1e-6 * p.r
        eye = np.eye(3)
        fd = np.array([(evaluate(p, x + step * e)[0] - evaluate(p, x - step * e)[0]) / (2 * step)
                       for e in eye])
        fdh = np.array([(evaluate(p, x + step * e)[1] - evaluate(p, x - step * e)[1]) / (2 * step)
                        for e in eye])
        scale_g = max(1.0, np.max(np.abs(g)))
        scale_h = max(1.0, np.max(np.abs(hs)))
        np.testing.assert_allclose(g, fd, atol=1e-5 * scale_g)
        np.testing.assert_allclose(hs, fdh, atol=1e-5 * scale_h)

    def test_outer_pucci_vanishes(self):
        p = make_params(0.5, 2 ** 12)
        rng = np.random.default_rng(0)
        s = rng.uniform(p.r, 2, 500)
        a = rng.uniform(0, 2 * np.pi, 500)
        pts = np.stack([s * np.cos(a), s * np.sin(a), rng.uniform(-1, 1, 500)], axis=-1)
        _, _, h = evaluate(p, pts)
        pm = pucci_minus_batch(h, p.ellipticity)
        assert np.all(np.abs(pm) <= OUTER_RESIDUAL_TOL * np.linalg.norm(h, axis=(-2, -1)))


class TestInequality:
    def test_small_k_fails(self):
        rep = inequality_check(make_params(1.0, 2), SMALL)
        assert not rep.passed and rep.min_margin < 0
        assert rep.outer_ok

    def test_large_k_passes(self):
        rep = inequality_check(make_params(1.0, 2 ** 10), SMALL)
        assert rep.passed and rep.min_margin >= 0

    def test_samples_kept(self):
        rep = inequality_check(make_params(1.0, 64), GridSpec(n=16), keep_samples=True)
        assert rep.samples.shape == (rep.n_points, 3)

    def test_grid_resolves_inner_ball(self):
        x, z = GridSpec(n=32).axes(1e-6)
        assert np.sum(np.abs(x) < 1e-6) >= 7 and 0.0 in x
        assert len(z) == 32

    def test_sweep_domain(self):
        with pytest.raises(DomainError):
            k_sweep(3.0, SMALL)

    def test_sweep_not_found(self):
        with pytest.raises(NotFound):
            k_sweep(1.0, SMALL, ks=(2, 4))

    def test_sweep_small_grid(self):
        sw = k_sweep(2.0, GridSpec(n=16), ks=tuple(2 ** j for j in range(1, 12)))
        assert sw.monotone
        assert not sw.passes[sw.k_min // 2] if sw.k_min > 2 else True


class TestBlowup:
    @pytest.mark.parametrize("k", [4, 16, 256])
    def test_infimum(self, k):
        p = make_params(1.0, k)
        b = harnack_blowup(p, SMALL)
        assert b.inf_b1 == 1 / k
        # attained on the unit sphere, never undercut inside the ball
        assert evaluate(p, [0.0, 1.0, 0.0])[0] == 1 / k
        pts = SMALL.points(p.r, radius=1.0)
        assert np.min(evaluate(p, pts)[0]) >= 1 / k

    def test_integral_floor(self):
        b = harnack_blowup(make_params(1.0, 16), SMALL)
        assert b.integral >= 0.5 * math.log(16) - 1e-6 and b.ok

    def test_integral_grows(self):
        vals = [harnack_blowup(make_params(1.0, k), SMALL).integral for k in (4, 16, 64, 256)]
        assert np.all(np.diff(vals) > 0)
