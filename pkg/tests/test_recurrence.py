import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from todachain.errors import NonPositiveField, TooFewSamples
from todachain.families.firstterm import (
    REDERIVED_COEFFS,
    GeneratingFunction,
    firstterm_fields,
    polynomial_WL,
)
from todachain.families.monge import monge_field, square_profile
from todachain.numcore import Grid3, ScalarField3, StencilConfig, cumulative_integral_y, grid_d1
from todachain.recurrence import (
    T_from_chain,
    alpha_chain,
    alpha_consistency,
    alpha_pde_residual,
    chain_consistency,
    theta_relation_residual,
    truncation_coherence,
)

FRAC = ScalarField3(lambda x, y, z: (x + z) / (1 - y), lambda x, y, z: (x + z > 0) & (y < 1))
FRAC_GRID = Grid3.from_bounds([(0.5, 1.5, 9), (0.0, 0.6, 41), (0.2, 1.0, 9)])
FT_GRID = Grid3.from_bounds([(1, 2, 17), (-2, -1, 17), (-0.5, 0.5, 17)])


def const(c):
    return ScalarField3(lambda x, y, z: c + 0 * x)


class TestChain:
    def test_z_independent(self):
        u = ScalarField3(lambda x, y, z: 1 + x * x + y * y + 0 * z)
        ch = alpha_chain(u, 3, Grid3.from_bounds([(0, 1, 5), (0, 1, 5), (0, 1, 7)]))
        for m in range(3):
            assert np.nanmax(np.abs(ch.alpha(m))) < 1e-12
        assert np.all(ch.alpha(3) == 1)
        assert len(ch.alphas) == 4

    def test_constant(self):
        ch = alpha_chain(const(2.5), 3, Grid3.from_bounds([(0, 1, 5), (0, 1, 5), (0, 1, 7)]))
        assert all(np.nanmax(np.abs(ch.alpha(m))) == 0 for m in range(3))

    def test_fraction_alpha0(self):
        ch = alpha_chain(FRAC, 1, FRAC_GRID)
        Y = FRAC_GRID.mesh()[1]
        assert np.max(np.abs(ch.alpha(0) + np.log(1 - Y))) < 1e-6

    def test_gridded_input_matches_field(self):
        X, Y, Z = FRAC_GRID.mesh()
        a = alpha_chain(FRAC, 1, FRAC_GRID).alpha(0)
        b = alpha_chain((X + Z) / (1 - Y), 1, FRAC_GRID).alpha(0)
        assert np.nanmax(np.abs(a - b)) < 1e-8

    def test_non_positive(self):
        with pytest.raises(NonPositiveField):
            alpha_chain(ScalarField3(lambda x, y, z: x - 0.5), 1, Grid3.from_bounds([(0, 1, 5)] * 3))

    def test_too_few_z(self):
        with pytest.raises(TooFewSamples):
            alpha_chain(FRAC, 1, Grid3.from_bounds([(0.5, 1, 5), (0, 0.5, 5), (0.2, 0.4, 3)]))


class TestConsistency:
    def test_z_independent_hand(self):
        # alpha chain vanishes, residual = (m+1) u_x / u
        u = ScalarField3(lambda x, y, z: 1 + x * x + 0 * y * z)
        x, y, z = np.array([0.3, 0.8]), np.array([0.1, 0.2]), np.array([0.5, 0.4])
        r = alpha_consistency(u, const(1.0), const(0.0), 1, x, y, z)
        assert np.allclose(r, 2 * 2 * x / (1 + x * x), atol=1e-9)

    def test_fraction_hand(self):
        x, y, z = np.array([0.7]), np.array([0.3]), np.array([0.4])
        a0 = ScalarField3(lambda x, y, z: -np.log(1 - y) + 0 * x)
        r = alpha_consistency(FRAC, const(1.0), a0, 1, x, y, z)
        assert r[0] == pytest.approx(2 / (x[0] + z[0]), abs=1e-9)

    def test_gridded_fraction(self):
        ch = alpha_chain(FRAC, 1, FRAC_GRID)
        X, _, Z = FRAC_GRID.mesh()
        r = chain_consistency(ch, 1, FRAC)
        assert np.nanmax(np.abs(r - 2 / (X + Z))) < 1e-6

    def test_level_range(self):
        with pytest.raises(ValueError):
            chain_consistency(alpha_chain(FRAC, 1, FRAC_GRID), 2)

    def test_constant_zero(self):
        r = alpha_consistency(const(3.0), const(1.0), const(0.0), 2, 0.1, 0.2, 0.3)
        assert abs(r) < 1e-14


class TestAlphaPDE:
    @pytest.mark.parametrize("form", ["printed", "eliminated"])
    def test_constant_alpha(self, form):
        r = alpha_pde_residual(const(1.0), const(1.0), 1, 0.3, 0.2, 0.1, form=form)
        assert abs(r) < 1e-14

    def test_alpha_z_unit_u(self):
        a = ScalarField3(lambda x, y, z: z + 0 * x)
        assert abs(alpha_pde_residual(const(1.0), a, 1, 0.3, 0.2, 0.1)) < 1e-10

    def test_nontrivial_on_monge(self):
        u = monge_field(square_profile(), "A")
        a = ScalarField3(lambda x, y, z: np.sin(x + 2 * y) * np.cos(z))
        r = alpha_pde_residual(u, a, 1, 1.0, 0.1, 0.5, StencilConfig(h=1e-2))
        assert abs(r) > 1e-3

    def test_eliminated_form_alpha_one_on_solution(self):
        # alpha = 1 satisfies the eliminated form exactly when u solves the Toda equation
        u = monge_field(square_profile(), "A")
        r = alpha_pde_residual(u, const(1.0), 1, 1.0, 0.1, 0.5, StencilConfig(h=1e-2), form="eliminated")
        assert abs(r) < 1e-6


class TestT:
    def test_n_top_zero(self):
        ch = alpha_chain(FRAC, 0, FRAC_GRID)
        T, reps = T_from_chain(ch)
        X, Y, Z = FRAC_GRID.mesh()
        assert np.array_equal(T, ch.u)
        assert reps[0].kind == "symmetry" and reps[0].max_abs < 1e-8

    def test_z_independent_zero(self):
        u = ScalarField3(lambda x, y, z: 1 + x * x + 0 * y * z)
        g = Grid3.from_bounds([(0, 1, 9), (0, 1, 9), (0, 1, 21)])
        T, reps = T_from_chain(alpha_chain(u, 2, g))
        assert np.nanmax(np.abs(T)) == 0 and reps[0].max_abs == 0

    def test_firstterm_cross_module(self):
        F = firstterm_fields(GeneratingFunction(polynomial_WL(2, 0.2), coeffs=REDERIVED_COEFFS))
        g = Grid3.from_bounds([(1, 2, 9), (-2, -1, 33), (-0.5, 0.5, 9)])
        y0 = g.origin.y
        gam = F.gamma.values
        ch = alpha_chain(F.u, 1, g, base={0: lambda x, z: gam(x, np.full_like(x, y0), z)})
        T, _ = T_from_chain(ch)
        X, Y, Z = g.mesh()
        direct = F.T.values(X, Y, Z)
        assert np.nanmax(np.abs(T - direct)) < 1e-8


class TestTheta:
    def test_trivial(self):
        th = ScalarField3(lambda x, y, z: x + y / 2)
        assert abs(theta_relation_residual(th, const(1.0), const(1.0), 0.2, 0.3, 0.4)) < 1e-12

    def test_z_matters(self):
        th = ScalarField3(lambda x, y, z: x + y / 2 + z)
        assert theta_relation_residual(th, const(1.0), const(1.0), 0.2, 0.3, 0.4) == pytest.approx(-0.5, abs=1e-12)

    def test_by_construction(self):
        th = ScalarField3(lambda x, y, z: x * (1 + z * z) + y)
        u = ScalarField3(lambda x, y, z: 1 + z * z + 0 * x)
        # alpha_1 := 2 (theta_y - theta_z^2/2) / u^2
        a1 = ScalarField3(lambda x, y, z: 2 * (1 - 2 * (x * z) ** 2) / (1 + z * z) ** 2)
        assert abs(theta_relation_residual(th, u, a1, 0.3, 0.1, 0.6)) < 1e-9


class TestCoherence:
    def test_firstterm_gauge_passes(self):
        F = firstterm_fields(GeneratingFunction(polynomial_WL(2, 0.2), coeffs=REDERIVED_COEFFS))
        gam = F.gamma.values
        y0 = FT_GRID.origin.y
        res = truncation_coherence(F.u, FT_GRID, 1, {0: lambda x, z: gam(x, np.full_like(x, y0), z)})
        assert res.passed, (res.max_abs, res.budget)

    def test_closed_form_gauge_passes(self):
        F = firstterm_fields(GeneratingFunction())
        res = truncation_coherence(F.u, FT_GRID, 1, {0: lambda x, z: z / x})
        assert res.passed and res.max_abs < 1e-8

    def test_monge_fails(self):
        g = Grid3.from_bounds([(0.5, 1.5, 17), (-0.4, 0.4, 17), (0.2, 1.0, 17)])
        res = truncation_coherence(monge_field(square_profile(), "A"), g, 1)
        assert not res.passed and res.max_abs > 1e-2

    def test_budget_needs_odd_counts(self):
        with pytest.raises(TooFewSamples):
            truncation_coherence(FRAC, Grid3.from_bounds([(0.5, 1.5, 8), (0, 0.5, 9), (0.2, 1, 9)]), 1)


@settings(max_examples=25, deadline=None)
@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(0.5, 2))
def test_quadrature_differentiation_commute(a, b, c):
    g = Grid3.from_bounds([(0, 1, 5), (0, 1, 33), (0, 1, 33)])
    X, Y, Z = g.mesh()
    f = np.exp(a * Y) * np.sin(c * Z + b)
    hy, hz = g.spacing[1], g.spacing[2]
    lhs = grid_d1(cumulative_integral_y(f, hy, axis=1), hz, 2)
    rhs = cumulative_integral_y(grid_d1(f, hz, 2), hy, axis=1)
    assert np.nanmax(np.abs(lhs - rhs)) < 1e-12
