import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from extremal_harnack import harness
from extremal_harnack.errors import (
    ChainEscapesDomain,
    DegenerateBase,
    GridTooCoarse,
    NoAdmissibleBase,
)
from extremal_harnack.geometry import Box, ParabolicCube
from extremal_harnack.harness import (
    DEFAULT_C_GRID,
    AnalyticField,
    GridField,
    RescaledField,
    analytic_field,
    backward_probe,
    extremes,
    forward_probe,
    global_chain,
    holder_estimate,
    minimum_principle_check,
)
from extremal_harnack.nonlinearity import from_id
from extremal_harnack.pucci import EllipticityPair
from extremal_harnack.solver import ProblemSpec, make_grid, solve

IDENT = from_id("identity")
LOG1 = from_id("logpow:beta=1")


def wavy(x, t):
    return 2.0 + np.sin(3 * x[..., 0]) * np.exp(t) + 0.3 * t


@pytest.fixture(scope="module")
def small_solved():
    spec = ProblemSpec("super", EllipticityPair(1.0, 2.0),
                       lambda x: 0.2 + np.exp(-4 * x[..., 0] ** 2), nonlinearity=LOG1)
    grid = make_grid(spec, 1, 2.0, 64, -1.0, 0.0, save_interval=0.5 * (4 / 64) ** 2)
    return solve(spec, grid)


class TestSampling:
    def test_c_grid(self):
        assert DEFAULT_C_GRID[0] == 1.0 and DEFAULT_C_GRID[-1] == 256.0
        assert len(DEFAULT_C_GRID) == 17

    def test_extremes_exact_for_linear(self):
        f = analytic_field("affine:5")
        lo, hi = extremes(f, Box((-0.5,), (0.25,), True, -1.0, 0.0, True, True))
        assert (lo, hi) == (4.5, 5.25)

    def test_grid_field_includes_faces(self, small_solved):
        f = GridField(small_solved)
        s = f.samples(-0.3, 0.31, 0)
        assert s[0] == -0.3 and s[-1] == 0.31
        assert np.all(np.diff(s) > 0)

    def test_too_coarse(self, small_solved):
        f = GridField(small_solved)
        with pytest.raises(GridTooCoarse):
            extremes(f, ParabolicCube((0.0,), 0.0, 0.05).box())

    def test_outside(self):
        with pytest.raises(ValueError):
            extremes(analytic_field("constant:1"), ParabolicCube((1.5,), 0.0, 1.0).box())

    def test_samples_must_be_odd(self):
        with pytest.raises(ValueError):
            AnalyticField(wavy, samples=4)

    def test_unknown_analytic(self):
        with pytest.raises(ValueError):
            analytic_field("quadratic")


class TestProbes:
    @pytest.mark.parametrize("probe", [backward_probe, forward_probe])
    def test_constant(self, probe):
        rep = probe(analytic_field("constant:5"), IDENT)
        assert rep.c_star == min(DEFAULT_C_GRID) and rep.passed

    def test_affine_backward_closed_form(self):
        rep = backward_probe(analytic_field("affine:5"), IDENT)
        # sup over the scaled set is 5 + 1/(4C); the smallest passing C solves 20C^2 - 20C - 1 = 0
        assert rep.c_star == math.sqrt(2)
        assert rep.c_refined == pytest.approx((20 + math.sqrt(480)) / 40, rel=1e-8)

    def test_degenerate_base(self):
        with pytest.raises(DegenerateBase):
            backward_probe(analytic_field("constant:0"), IDENT)

    def test_no_admissible_base(self):
        with pytest.raises(NoAdmissibleBase):
            forward_probe(analytic_field("constant:1"), IDENT, base_points=[((0.0,), 0.0)])

    def test_solved_field(self, small_solved):
        rep = backward_probe(small_solved, LOG1)
        assert rep.records and rep.reason

    def test_rescaling_invariance(self):
        base = AnalyticField(wavy, name="wavy")
        bases = [((x,), t) for x in (-0.5, 0.0, 0.4) for t in (-2.5, -1.5)]
        rho = 0.3
        ref = forward_probe(base, IDENT, base_points=bases, rho=rho, refine=False)
        r, A = 0.5, 3.0
        v = RescaledField(base, r, A=A)
        mapped = [((x[0] / r,), t / r ** 2) for x, t in bases]
        got = forward_probe(v, IDENT, base_points=mapped, rho=rho / r, refine=False)
        assert ref.c_star == got.c_star
        r1 = [rec["ratio"] for rec in ref.records if rec["status"] == "ok"]
        r2 = [rec["ratio"] for rec in got.records if rec["status"] == "ok"]
        assert len(r1) == len(r2) > 0
        np.testing.assert_allclose(r1, r2, rtol=1e-3)

    def test_rescaled_bounds(self):
        v = RescaledField(analytic_field("constant:1"), 0.5, x_shift=0.2, t_shift=-1.0)
        assert v.space_bounds == pytest.approx((-4.4, 3.6))
        assert v.time_bounds == pytest.approx((-12.0, 4.0))
        with pytest.raises(ValueError):
            RescaledField(analytic_field("constant:1"), -1.0)


class TestHolder:
    def test_sqrt_abs(self):
        rep = holder_estimate(analytic_field("sqrt-abs"), IDENT, 2.0)
        assert 0.45 <= rep.alpha_hat <= 0.55
        assert rep.rhos[0] == 1.0
        assert all(rep.flags)

    def test_constant(self):
        rep = holder_estimate(analytic_field("constant:3"), IDENT, 2.0)
        assert rep.oscs == [0.0] * len(rep.oscs)
        assert rep.alpha_hat is None and "zero" in rep.note and rep.passed

    def test_requires_levels(self, small_solved):
        with pytest.raises(GridTooCoarse):
            holder_estimate(small_solved, LOG1, 2.0, require_fit=True)

    def test_c_above_one(self):
        with pytest.raises(ValueError):
            holder_estimate(analytic_field("constant:3"), IDENT, 1.0)

    @settings(max_examples=25, deadline=None)
    @given(st.floats(-0.8, 0.8), st.floats(-2.5, 0.0), st.sampled_from([1.5, 2.0, 4.0]))
    def test_osc_nonincreasing(self, x0, t0, C):
        f = AnalyticField(wavy, time_bounds=(-4.0, 0.0))
        rep = holder_estimate(f, IDENT, C, center=((x0,), t0))
        assert all(b <= a for a, b in zip(rep.oscs, rep.oscs[1:]))


class TestChain:
    def test_constant_hand_arithmetic(self):
        rep = global_chain(analytic_field("constant:5"), IDENT, 2.0, 1.0)
        assert rep.rhos == [0.25] * 8
        assert rep.K == 8
        assert rep.t_K == -0.375
        assert rep.radii[-1] == 1.0
        assert rep.integral == 0.0 and rep.chain_ratio == 1.0
        assert rep.passed

    def test_backward_mirror(self):
        f = analytic_field("constant:5", time_bounds=(-4.0, 4.0))
        rep = global_chain(f, IDENT, 2.0, 1.0, "backward")
        assert rep.K == 8 and rep.t_K == 0.375 and rep.passed

    def test_escapes(self):
        f = analytic_field("constant:5", space_bounds=(-0.5, 0.5))
        with pytest.raises(ChainEscapesDomain):
            global_chain(f, IDENT, 2.0, 1.0)

    def test_direction(self):
        with pytest.raises(ValueError):
            global_chain(analytic_field("constant:5"), IDENT, 2.0, 1.0, "sideways")

    def test_majorant_on_affine(self):
        rep = global_chain(analytic_field("affine:5"), LOG1, 2.0, 1.0)
        assert rep.levels[-1] > rep.u0
        assert rep.majorization_ok and rep.integral <= rep.analytic_bound


class TestMinimumPrinciple:
    def test_constants(self):
        fam = [(e, analytic_field(f"constant:{e}")) for e in (0.1, 0.01, 0.001)]
        rep = minimum_principle_check(fam, LOG1)
        assert rep.verdict == "Checked" and rep.passed
        assert [r["M_K"] for r in rep.rows] == [0.1, 0.01, 0.001]

    def test_gated(self):
        fam = [(0.1, analytic_field("constant:0.1"))]
        rep = minimum_principle_check(fam, from_id("root"))
        assert rep.verdict == "NotApplicable" and rep.rows == []


def test_probe_field_adapter(small_solved):
    assert isinstance(harness.as_probe_field(small_solved), GridField)
    f = analytic_field("constant:1")
    assert harness.as_probe_field(f) is f
