import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from extremal_harnack.geometry import (
    Box,
    ParabolicCube,
    WaitingSetMinus,
    WaitingSetPlus,
    contains,
    fits_in,
    forward_radius_limit,
    intrinsic_scale,
)
from extremal_harnack.nonlinearity import Nonlinearity, from_id

finite = st.floats(-5, 5, allow_nan=False)
radius = st.floats(0.01, 3)
cn = st.floats(0.05, 1.0)


class TestMembership:
    def test_cube_closed_top(self):
        assert contains(ParabolicCube((0.0,), 0.0, 1.0), ((0.0,), 0.0))

    def test_cube_open_bottom(self):
        assert not contains(ParabolicCube((0.0,), 0.0, 1.0), ((0.0,), -1.0))

    def test_cube_open_sides(self):
        q = ParabolicCube((0.0, 0.0), 0.0, 1.0)
        assert not contains(q, ((1.0, 0.0), -0.5))
        assert contains(q, ((0.999, -0.999), -0.5))

    def test_plus_window(self):
        a = WaitingSetPlus((0.0,), 0.0, 1.0, 1.0)
        assert contains(a, ((0.0,), 0.7))
        assert contains(a, ((0.0,), 0.75))
        assert not contains(a, ((0.0,), 0.5))
        assert not contains(a, ((0.5,), 0.7))

    def test_minus_closed(self):
        a = WaitingSetMinus(1.0, 1)
        assert contains(a, ((0.5,), -0.75)) and contains(a, ((-0.5,), -0.5))
        assert not contains(a, ((0.0,), -0.4))

    def test_minus_scaled(self):
        b = WaitingSetMinus(1.0, 2, (1.0, 1.0), 2.0, 0.5).box()
        np.testing.assert_allclose(b.lo, (0.75, 0.75))
        assert b.t_lo == pytest.approx(2 + 0.25 * -0.75)
        assert b.t_hi == pytest.approx(2 + 0.25 * -0.5)

    @pytest.mark.parametrize("bad", [0.0, -1.0, np.inf, np.nan])
    def test_bad_radius(self, bad):
        with pytest.raises(ValueError):
            ParabolicCube((0.0,), 0.0, bad)

    def test_bad_cn(self):
        with pytest.raises(ValueError):
            WaitingSetPlus((0.0,), 0.0, 1.0, 1.5)
        with pytest.raises(ValueError):
            WaitingSetMinus(0.0)

    def test_vectorized(self):
        b = ParabolicCube((0.0,), 0.0, 1.0).box()
        x = np.array([[0.0], [0.0], [2.0]])
        t = np.array([0.0, -1.0, -0.5])
        np.testing.assert_array_equal(b.contains(x, t), [True, False, False])


class TestScale:
    def test_identity(self):
        assert intrinsic_scale(from_id("identity"), 0.3, 2.0) == 0.25

    def test_eta_three(self):
        nl = Nonlinearity(eta=lambda t: np.full_like(np.asarray(t, float), 3.0), lambda0=3.0)
        assert intrinsic_scale(nl, 1.0, 1.5) == pytest.approx(1 / 6)

    def test_rejects(self):
        with pytest.raises(ValueError):
            intrinsic_scale(from_id("identity"), 0.0, 2.0)
        with pytest.raises(ValueError):
            intrinsic_scale(from_id("identity"), 1.0, 0.5)


class TestFits:
    def test_nested(self):
        dom = ParabolicCube((0.0,), 0.0, 2.0)
        assert fits_in(dom, [ParabolicCube((0.0,), -1.0, 0.2), WaitingSetPlus((0.0,), -1.0, 0.1)])

    def test_forward_exits(self):
        assert not fits_in(ParabolicCube((0.0,), 0.0, 2.0), [WaitingSetPlus((0.0,), -0.1, 1.0)])

    def test_equal_sets(self):
        q = ParabolicCube((0.0,), 0.0, 2.0)
        assert fits_in(q, [ParabolicCube((0.0,), 0.0, 2.0)])

    @settings(max_examples=100, deadline=None)
    @given(st.floats(-1.5, 1.5), st.floats(-3.9, -0.01), cn)
    def test_forward_limit_is_tight(self, x0, t0, c):
        dom = ParabolicCube((0.0,), 0.0, 2.0)
        rho = forward_radius_limit(dom, (x0,), t0, c)
        if rho <= 0:
            return
        assert fits_in(dom, [ParabolicCube((x0,), t0, 2 * rho * (1 - 1e-9)),
                             WaitingSetPlus((x0,), t0, rho * (1 - 1e-9), c)])
        grown = [ParabolicCube((x0,), t0, 2 * rho * (1 + 1e-6)),
                 WaitingSetPlus((x0,), t0, rho * (1 + 1e-6), c)]
        assert not fits_in(dom, grown)


class TestProperties:
    @settings(max_examples=200, deadline=None)
    @given(finite, finite, radius)
    def test_cube_boundary(self, x0, t0, r):
        q = ParabolicCube((x0,), t0, r)
        assert contains(q, ((x0,), t0))
        assert not contains(q, ((x0,), t0 - r * r))
        assert not contains(q, ((x0 + r,), t0))

    @settings(max_examples=200, deadline=None)
    @given(finite, finite, radius, cn, st.floats(0.05, 20), st.sampled_from([-1.5, -0.98, 0.0, 0.5, 0.98, 1.5]),
           st.sampled_from([-0.5, 0.02, 0.5, 0.98, 1.5]))
    def test_scaling_covariance(self, x0, t0, r, c, lam, u, v):
        # (x, t) in A+_r(x0, t0) iff (x0 + s(x - x0), t0 + s^2 (t - t0)) in A+_{s r};
        # sample points stay off the faces so rounding cannot flip membership
        a = WaitingSetPlus((x0,), t0, r, c)
        b = a.box()
        x = x0 + u * (b.hi[0] - x0)
        t = b.t_lo + v * (b.t_hi - b.t_lo)
        scaled = WaitingSetPlus((x0,), t0, lam * r, c)
        assert contains(a, ((x,), t)) == contains(
            scaled, ((x0 + lam * (x - x0),), t0 + lam ** 2 * (t - t0)))

    @settings(max_examples=100, deadline=None)
    @given(cn, st.floats(0.01, 5))
    def test_minus_scaling(self, c, s):
        unit = WaitingSetMinus(c, 1).box()
        big = WaitingSetMinus(c, 1, scale=s).box()
        assert big.hi[0] == pytest.approx(s * unit.hi[0])
        assert big.t_lo == pytest.approx(s * s * unit.t_lo)

    def test_box_within(self):
        outer = Box((-1.0,), (1.0,), False, -1.0, 0.0, False, True)
        assert outer.within(outer)
        assert not Box((-1.0,), (1.1,), True, -1.0, 0.0, True, True).within(outer)
