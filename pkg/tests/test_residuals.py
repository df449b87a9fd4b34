import numpy as np
import pytest

from todachain.errors import AllPointsSkipped, ZeroResidual
from todachain.numcore import Grid3, Point3, ScalarField3, StencilConfig
from todachain.residuals import (
    SymmetryPair,
    convergence_order,
    derivative_field,
    discrete_chain_residual,
    residual_report,
    symmetry_residual,
    system2_residuals,
    system3_residuals,
    theta_residual,
    toda_residual,
)

CFG = StencilConfig()


def lin():
    return ScalarField3(lambda x, y, z: 2 + 3 * z, lambda x, y, z: z > -2 / 3)


def frac():
    return ScalarField3(lambda x, y, z: (x + z) / (1 - y), lambda x, y, z: (x + z > 0) & (y < 1))


def frac_mirror():
    return ScalarField3(lambda x, y, z: (y + z) / (1 - x), lambda x, y, z: (y + z > 0) & (x < 1))


def const(c):
    return ScalarField3(lambda x, y, z: c + 0 * x)


P = Point3(0.7, 0.2, 0.4)


class TestToda:
    def test_linear(self):
        assert abs(toda_residual(lin(), P, CFG)) < 1e-10

    def test_fraction(self):
        assert abs(toda_residual(frac(), P, CFG)) < 1e-8

    def test_exponential(self):
        u = ScalarField3(lambda x, y, z: np.exp(x + y + z))
        assert toda_residual(u, Point3(0, 0, 0), CFG) == pytest.approx(-1.0, abs=1e-6)


class TestReport:
    def test_linear_grid(self):
        g = Grid3.from_bounds([(0, 1, 5), (0, 1, 5), (0, 1, 5)])
        r = residual_report(lin(), g, CFG)
        assert r.max_abs < 1e-9 and r.n_skipped == 0 and r.n_points == 125

    def test_straddle(self):
        g = Grid3.from_bounds([(0.5, 1.5, 5), (0.8, 1.2, 9), (0, 1, 5)])
        r = residual_report(frac(), g, CFG)
        assert r.n_skipped > 0 and np.isfinite(r.max_abs)

    def test_empty_domain(self):
        g = Grid3.from_bounds([(0.5, 1.5, 5), (2, 3, 5), (0, 1, 5)])
        with pytest.raises(AllPointsSkipped):
            residual_report(frac(), g, CFG)

    def test_threads_identical(self):
        g = Grid3.from_bounds([(0.5, 1.5, 7), (-0.4, 0.4, 7), (0, 1, 7)])
        u = ScalarField3(lambda x, y, z: (x + z) ** 2 / (1 - y) + 0.01 * np.sin(3 * y))
        a = residual_report(u, g, CFG, threads=1).to_dict(timing=False)
        b = residual_report(u, g, CFG, threads=4).to_dict(timing=False)
        assert a == b


class TestSystems:
    def test_system2_trivial(self):
        assert np.allclose(system2_residuals(const(1.0), const(2.0), P, CFG), 0, atol=1e-14)

    def test_system2_fraction(self):
        r = system2_residuals(frac(), frac(), P, CFG)
        assert max(map(abs, r)) < 1e-8

    def test_system2_linear_hand(self):
        # r2 = u_z - T_x with u_z = 3
        r = system2_residuals(lin(), const(0.0), P, CFG)
        assert r[0] == pytest.approx(0.0, abs=1e-9) and r[1] == pytest.approx(3.0, abs=1e-9)

    def test_system3_trivial(self):
        assert np.allclose(system3_residuals(const(1.0), const(-1.0), P, CFG), 0, atol=1e-14)

    def test_system3_mirror(self):
        q = Point3(0.2, 0.7, 0.4)
        assert max(map(abs, system3_residuals(frac_mirror(), frac_mirror(), q, CFG))) < 1e-8

    def test_system3_linear_hand(self):
        r = system3_residuals(lin(), const(0.0), P, CFG)
        assert r[0] == pytest.approx(0.0, abs=1e-9) and r[1] == pytest.approx(3.0, abs=1e-9)


class TestSymmetry:
    def test_zero(self):
        assert symmetry_residual(SymmetryPair(frac(), const(0.0)), P, CFG) == 0.0

    def test_uz(self):
        S = ScalarField3(lambda x, y, z: 1 / (1 - y) + 0 * x)
        assert abs(symmetry_residual(SymmetryPair(frac(), S), P, CFG)) < 1e-8

    @pytest.mark.parametrize(
        "S",
        [
            lambda x, y, z: 1 / (1 - y) + 0 * x,
            lambda x, y, z: (x + z) / (1 - y) ** 2,
        ],
        ids=["u_x", "u_y"],
    )
    def test_coordinate_derivatives(self, S):
        assert abs(symmetry_residual(SymmetryPair(frac(), ScalarField3(S)), P, CFG)) < 1e-8

    @pytest.mark.parametrize("axis", "xyz")
    def test_numeric_derivative_field(self, axis):
        u = ScalarField3(lambda x, y, z: (z * z + 1) / (4 * np.cosh((x - y) / 2) ** 2))
        S = derivative_field(u, axis)
        assert abs(symmetry_residual(SymmetryPair(u, S), P, StencilConfig(h=1e-2))) < 1e-5


class TestTheta:
    def test_x(self):
        assert theta_residual(ScalarField3(lambda x, y, z: x), P, CFG) == pytest.approx(0, abs=1e-12)

    def test_xz(self):
        assert theta_residual(ScalarField3(lambda x, y, z: x * z), P, CFG) == pytest.approx(0, abs=1e-10)

    def test_negative_control(self):
        th = ScalarField3(lambda x, y, z: (x * x / 2 + z * x) / (1 - y))
        assert theta_residual(th, Point3(1, 0, 1), CFG) == pytest.approx(2.0, abs=1e-6)


class TestDiscrete:
    def test_linear_exact(self):
        rho = ScalarField3(lambda x, y, z: np.log(2 + 3 * z))
        assert abs(discrete_chain_residual(rho, P, 0.1, CFG)) < 1e-9

    @pytest.mark.parametrize("eps", [0.3, 0.05, 0.01])
    def test_fraction_any_eps(self, eps):
        rho = ScalarField3(lambda x, y, z: np.log((x + z) / (1 - y)))
        assert abs(discrete_chain_residual(rho, P, eps, CFG)) < 1e-9

    def test_quadratic_in_z_is_exact(self):
        rho = ScalarField3(lambda x, y, z: np.log((z * z + 1) / (4 * np.cosh((x - y) / 2) ** 2)))
        assert abs(discrete_chain_residual(rho, P, 0.2, CFG)) < 1e-9

    def test_curved_order_two(self):
        from todachain.families.monge import monge_field, square_profile

        u = monge_field(square_profile(), "A")
        rho = ScalarField3(lambda x, y, z: np.log(u.values(x, y, z)))
        P = Point3(1.0, 0.1, 0.5)
        order = convergence_order(lambda p, e: discrete_chain_residual(rho, p, e, CFG), P, [0.1, 0.05, 0.025])
        assert order == pytest.approx(2.0, abs=0.2)


class TestConvergence:
    def _fd_error(self, order):
        f = ScalarField3(lambda x, y, z: np.sin(x) * np.cos(0.5 * y) + z)
        from todachain.numcore import central_diff

        exact = np.cos(0.3) * np.cos(0.1)

        def err(p, h):
            return central_diff(f, p, "x", StencilConfig(h=h, order=order, relative=False)) - exact

        return err

    def test_order2(self):
        assert convergence_order(self._fd_error(2), Point3(0.3, 0.2, 0), [0.08, 0.04, 0.02]) == pytest.approx(2.0, abs=0.1)

    def test_order4(self):
        assert convergence_order(self._fd_error(4), Point3(0.3, 0.2, 0), [0.08, 0.04, 0.02]) == pytest.approx(4.0, abs=0.2)

    def test_exact_polynomial(self):
        with pytest.raises(ZeroResidual):
            convergence_order(lambda p, h: toda_residual(lin(), p, StencilConfig(h=h)), P, [0.04, 0.02, 0.01])
