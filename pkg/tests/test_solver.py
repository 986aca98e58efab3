import math
import os

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from extremal_harnack.errors import CflViolation
from extremal_harnack.nonlinearity import from_id
from extremal_harnack.pucci import EllipticityPair, pucci_minus
from extremal_harnack.report import write_field
from extremal_harnack.solver import (
    Field,
    Grid,
    ProblemSpec,
    Side,
    cfl_dt,
    check_continuity,
    discrete_pucci,
    load_field,
    make_grid,
    monotonicity_certificate,
    scheme_coefficients,
    solve,
    step,
    upwind_gradient_norm,
)

E11 = EllipticityPair(1.0, 1.0)
E12 = EllipticityPair(1.0, 2.0)
IDENT = from_id("identity")


def node_grid(dim, n=5, h=0.1):
    axis = h * (np.arange(n) - n // 2)
    return np.stack(np.meshgrid(*([axis] * dim), indexing="ij"), axis=-1)


def heat(x, t, t0=0.1):
    s = t + t0
    return np.exp(-x[..., 0] ** 2 / (4 * s)) / np.sqrt(4 * np.pi * s)


def heat_error(cells, t_end=0.5):
    spec = ProblemSpec("super", E11, lambda x: heat(x, 0.0), drift=lambda g: 0.0,
                       boundary=heat)
    grid = make_grid(spec, 1, 2.0, cells, 0.0, t_end, save_interval=t_end)
    f = solve(spec, grid)
    x = grid.points()
    return float(np.max(np.abs(f.values[-1] - heat(x, t_end))))


def exp_error(cells):
    spec = ProblemSpec("super", E11, lambda x: np.exp(x[..., 0]), nonlinearity=IDENT)
    grid = make_grid(spec, 1, 1.0, cells, 0.0, 1.0, save_interval=0.25)
    f = solve(spec, grid)
    exact = np.exp(grid.points()[..., 0])
    return float(np.max(np.abs(f.values - exact[None])))


class TestDiscreteOperators:
    @pytest.mark.parametrize("a,b", [(1.0, -2.0), (0.5, 0.25), (-1.0, -3.0)])
    def test_axis_quadratic_exact(self, a, b):
        x = node_grid(2, 3, 0.2)
        u = a * x[..., 0] ** 2 + b * x[..., 1] ** 2
        got = discrete_pucci(u, (1, 1), 0, E12, "-", h=0.2)
        assert got == pytest.approx(pucci_minus(np.diag([2 * a, 2 * b]), E12), abs=1e-12)

    def test_linear(self):
        x = node_grid(2, 3)
        u = 3 * x[..., 0] - x[..., 1]
        assert discrete_pucci(u, (1, 1), 0, E12, "-", h=0.1) == pytest.approx(0, abs=1e-12)

    def test_saddle_picks_diagonal(self):
        x = node_grid(2, 3, 0.5)
        u = x[..., 0] * x[..., 1]
        assert discrete_pucci(u, (1, 1), 0, E12, "-", h=0.5) == pytest.approx(-1.0)
        assert discrete_pucci(u, (1, 1), 0, E12, "+", h=0.5) == pytest.approx(1.0)

    def test_interior_only(self):
        with pytest.raises(IndexError):
            discrete_pucci(np.zeros(5), (0,), 0, E12, h=0.1)

    def test_gradient_constant(self):
        assert upwind_gradient_norm(np.full(5, 2.0), (2,), 0, "super", h=0.1) == 0.0

    @pytest.mark.parametrize("side", ["super", "sub"])
    def test_gradient_linear(self, side):
        u = node_grid(1)[..., 0]
        assert upwind_gradient_norm(u, (2,), 0, side, h=0.1) == pytest.approx(1.0)

    def test_gradient_kink(self):
        u = np.abs(node_grid(1)[..., 0])
        assert upwind_gradient_norm(u, (2,), 0, "super", h=0.1) == 0.0
        assert upwind_gradient_norm(u, (2,), 0, "sub", h=0.1) == pytest.approx(1.0)

    def test_side_parse(self):
        assert Side.parse("Super") is Side.SUPER and Side.parse(Side.SUB) is Side.SUB
        with pytest.raises(ValueError):
            Side.parse("both")


class TestScheme:
    def test_coefficients_nonnegative_at_cfl(self):
        for dim in (1, 2):
            dt = cfl_dt(E12, dim, 0.05, 3.0)
            c = scheme_coefficients(E12, dim, 0.05, dt, 3.0)
            assert c["center"] >= 0 and c["neighbor"] >= 0

    def test_step_rejects_large_dt(self):
        spec = ProblemSpec("super", E12, lambda x: x[..., 0], nonlinearity=IDENT)
        x = node_grid(1)
        bpts = x[[0, -1]]
        with pytest.raises(CflViolation):
            step(x[..., 0], spec, 0.1, 1.0, 0.0, bpts, 1.0)

    @pytest.mark.parametrize("side", ["super", "sub"])
    @pytest.mark.parametrize("dim", [1, 2])
    def test_certificate(self, side, dim):
        spec = ProblemSpec(side, E12, lambda x: 0 * x[..., 0], nonlinearity=from_id("logpow:beta=1"))
        rep = monotonicity_certificate(spec, dim, 0.1, 500, np.random.default_rng(7))
        assert rep["passed"]

    def test_spec_needs_one_drift(self):
        with pytest.raises(ValueError):
            ProblemSpec("super", E12, lambda x: x, nonlinearity=IDENT, drift=lambda g: g)
        with pytest.raises(ValueError):
            ProblemSpec("super", E12, lambda x: x)

    def test_discontinuous_data(self):
        with pytest.raises(ValueError):
            check_continuity(lambda x: np.sign(x[..., 0]), 1, 1.0)
        check_continuity(lambda x: np.abs(x[..., 0]), 1, 1.0)

    @pytest.mark.parametrize("bad", [dict(dim=3), dict(cells=1), dict(dt=0.0),
                                     dict(t_end=-2.0)])
    def test_grid_validation(self, bad):
        kw = dict(dim=1, radius=1.0, cells=8, t_start=-1.0, t_end=0.0, dt=0.01, layers=2)
        kw.update(bad)
        with pytest.raises(ValueError):
            Grid(**kw)


class TestSolve:
    @pytest.mark.parametrize("dim", [1, 2])
    @pytest.mark.parametrize("side", ["super", "sub"])
    def test_constant_fixed_point(self, dim, side):
        spec = ProblemSpec(side, E12, lambda x: np.full(x.shape[:-1], 0.7),
                           nonlinearity=from_id("logpow:beta=1"))
        f = solve(spec, make_grid(spec, dim, 1.0, 16, 0.0, 0.1))
        np.testing.assert_array_equal(f.values, 0.7)

    def test_zero(self):
        spec = ProblemSpec("super", E12, lambda x: 0 * x[..., 0], nonlinearity=IDENT)
        f = solve(spec, make_grid(spec, 1, 1.0, 16, 0.0, 0.1))
        assert np.all(f.values == 0)

    def test_stationary_exponential(self):
        h = 1 / 32
        assert exp_error(64) <= 5 * h * h

    def test_heat_kernel_converges(self):
        e1, e2 = heat_error(32, 0.2), heat_error(64, 0.2)
        assert math.log2(e1 / e2) >= 0.9

    @settings(max_examples=5, deadline=None)
    @given(st.integers(0, 2 ** 31), st.sampled_from(["super", "sub"]))
    def test_comparison(self, seed, side):
        rng = np.random.default_rng(seed)
        c1, c2 = rng.normal(size=4), rng.normal(size=4)
        amp = rng.uniform(0.0, 1.0)

        def g1(x):
            k = np.arange(1, 5)
            return np.sum(c1 * np.sin(np.outer(x[..., 0].ravel(), k)).reshape(x.shape[:-1] + (4,)),
                          axis=-1)

        def g2(x):
            return g1(x) + amp * (1 + 0.5 * np.cos(3 * x[..., 0] + c2[0]))

        nl = from_id("logpow:beta=1")
        s1 = ProblemSpec(side, E12, g1, nonlinearity=nl)
        s2 = ProblemSpec(side, E12, g2, nonlinearity=nl)
        grid = make_grid(s2, 1, 1.0, 32, 0.0, 0.1)
        g1grid = make_grid(s1, 1, 1.0, 32, 0.0, 0.1)
        grid = grid if grid.dt <= g1grid.dt else g1grid
        f1, f2 = solve(s1, grid), solve(s2, grid)
        assert np.min(f2.values - f1.values) >= -1e-12

    def test_dt_never_grows(self):
        spec = ProblemSpec("super", E12, lambda x: np.exp(-10 * x[..., 0] ** 2),
                           nonlinearity=from_id("pow:eps=0.5"))
        grid = make_grid(spec, 1, 1.0, 32, 0.0, 0.05)
        f = solve(spec, grid)
        assert f.grid.dt <= grid.dt
        assert f.meta["steps"] >= grid.layers


class TestField:
    def make(self):
        spec = ProblemSpec("super", E12, lambda x: 1 + x[..., 0] ** 2, nonlinearity=IDENT)
        return solve(spec, make_grid(spec, 1, 1.0, 8, -0.1, 0.0, save_interval=0.05))

    def test_shape_and_evaluate(self):
        f = self.make()
        assert f.values.shape == (f.grid.layers + 1, 9)
        assert f.evaluate(np.array([[f.grid.axis[3]]]), f.times[1])[0] == pytest.approx(
            f.values[1, 3])
        with pytest.raises(ValueError):
            f.evaluate(np.array([[2.0]]), 0.0)

    def test_rows_round_trip(self, tmp_path):
        f = self.make()
        g = Field.from_rows(f.grid, f.to_rows())
        np.testing.assert_array_equal(f.values, g.values)
        path = write_field(str(tmp_path), "u", f)
        h = load_field(path)
        np.testing.assert_array_equal(h.values, f.values)
        assert os.path.exists(tmp_path / "u.csv")
        assert h.grid == f.grid

    def test_non_finite(self):
        f = self.make()
        bad = f.values.copy()
        bad[0, 0] = np.nan
        with pytest.raises(Exception):
            Field(f.grid, bad)
