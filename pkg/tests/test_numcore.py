import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from todachain.errors import NoBracket, SingularJacobian, TooFewSamples
from todachain.numcore import (
    Grid3,
    Point3,
    ScalarField3,
    StencilConfig,
    central_diff,
    cumulative_integral_y,
    grid_d1,
    mixed_diff_xy,
    newton_batch,
    second_diff,
    solve_newton_nd,
    solve_scalar_root,
)

P0 = Point3(0.0, 0.0, 0.0)


def F(fn):
    return ScalarField3(fn)


class TestCentralDiff:
    def test_constant_is_zero(self):
        f = F(lambda x, y, z: 7.0 + 0 * x)
        for ax in "xyz":
            assert central_diff(f, Point3(0.3, -1.2, 4.0), ax, StencilConfig(h=0.1)) == 0.0

    def test_quadratic_exact_order2(self):
        f = F(lambda x, y, z: x**2)
        cfg = StencilConfig(h=0.1, order=2, relative=False)
        assert central_diff(f, Point3(3, 0, 0), "x", cfg) == pytest.approx(6.0, abs=1e-13)

    def test_sine_order2(self):
        f = F(lambda x, y, z: np.sin(x))
        cfg = StencilConfig(h=1e-3, order=2)
        assert abs(central_diff(f, P0, "x", cfg) - 1.0) < 2e-7

    def test_order4_beats_order2(self):
        f = F(lambda x, y, z: np.exp(0.7 * y))
        p = Point3(0, 0.4, 0)
        exact = 0.7 * math.exp(0.28)
        e2 = abs(central_diff(f, p, "y", StencilConfig(h=1e-2, order=2)) - exact)
        e4 = abs(central_diff(f, p, "y", StencilConfig(h=1e-2, order=4)) - exact)
        assert e4 < e2 / 100


class TestMixedAndSecond:
    def test_bilinear(self):
        f = F(lambda x, y, z: x * y)
        assert mixed_diff_xy(f, Point3(1.3, -0.2, 5), StencilConfig(h=0.1)) == pytest.approx(1.0, abs=1e-12)

    def test_y_independent(self):
        f = F(lambda x, y, z: np.cos(x) + 0 * y)
        assert mixed_diff_xy(f, Point3(0.4, 0.1, 0), StencilConfig(h=0.1)) == pytest.approx(0.0, abs=1e-14)

    def test_x2y2(self):
        f = F(lambda x, y, z: x**2 * y**2)
        assert abs(mixed_diff_xy(f, Point3(1, 1, 0), StencilConfig(h=1e-3)) - 4.0) < 1e-6

    def test_second_z2(self):
        f = F(lambda x, y, z: z**2)
        assert second_diff(f, Point3(0, 0, 2.5), "z", StencilConfig(h=0.1)) == pytest.approx(2.0, abs=1e-11)

    def test_second_linear(self):
        f = F(lambda x, y, z: 3 * z - 1)
        assert second_diff(f, Point3(0, 0, 0.7), "z", StencilConfig(h=0.1)) == pytest.approx(0.0, abs=1e-11)

    def test_second_exp(self):
        f = F(lambda x, y, z: np.exp(z))
        assert abs(second_diff(f, P0, "z", StencilConfig(h=1e-3)) - 1.0) < 1e-6


class TestRoots:
    def test_linear_guess(self):
        assert solve_scalar_root(lambda u: u - 1, 0.0) == pytest.approx(1.0, abs=1e-12)

    def test_bracket(self):
        assert solve_scalar_root(lambda u: u * u - 4, (0.0, 5.0)) == pytest.approx(2.0, abs=1e-12)

    def test_no_bracket(self):
        with pytest.raises(NoBracket):
            solve_scalar_root(lambda u: u * u + 1, (0.0, 5.0))

    def test_newton_nd_linear(self):
        v = solve_newton_nd(lambda v: v - np.array([1.0, 2.0]), [0.0, 0.0])
        assert np.allclose(v, [1, 2], atol=1e-12)

    def test_newton_nd_coupled(self):
        G = lambda v: np.array([v[0] ** 2 - v[1] - 1, v[1] - 3])
        v = solve_newton_nd(G, [1.5, 3.0], tol=1e-12)
        # bisection oracle for the first coordinate at w = 3
        lo, hi = 0.0, 5.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            lo, hi = (mid, hi) if mid * mid - 4 < 0 else (lo, mid)
        assert abs(v[0] - lo) < 1e-10 and abs(v[1] - 3) < 1e-12

    def test_newton_nd_singular(self):
        G = lambda v: np.array([v[0] - 1.0, 0.0 * v[1] + 1.0])
        with pytest.raises(SingularJacobian):
            solve_newton_nd(G, [0.0, 0.0])

    def test_newton_batch_args_are_sliced(self):
        targets = np.array([[1.0], [4.0], [9.0]])
        G = lambda V, t: V**2 - t
        res = newton_batch(G, np.ones((3, 1)), args=(targets,), tol=1e-13)
        assert np.all(res.ok)
        assert np.allclose(res.x[:, 0], [1, 2, 3], atol=1e-12)


class TestQuadrature:
    def test_constant(self):
        out = cumulative_integral_y(np.ones(9), 0.25)
        assert np.allclose(out, 0.25 * np.arange(9), atol=1e-15)

    @pytest.mark.parametrize("n", [2, 3, 4, 7, 10])
    def test_linear_exact(self, n):
        y = np.linspace(0, 1, n)
        out = cumulative_integral_y(2 * y, y[1] - y[0])
        assert np.allclose(out, y**2, atol=1e-14)

    def test_exp_fourth_order(self):
        errs = []
        for n in (11, 21, 41):
            y = np.linspace(0, 1, n)
            errs.append(np.max(np.abs(cumulative_integral_y(np.exp(y), y[1]) - (np.exp(y) - 1))))
        assert math.log2(errs[1] / errs[2]) == pytest.approx(4.0, abs=0.3)

    def test_too_few(self):
        with pytest.raises(TooFewSamples):
            cumulative_integral_y(np.ones(1), 0.1)

    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.floats(-3, 3), min_size=4, max_size=4), st.integers(4, 30))
    def test_cubic_exact(self, c, n):
        y = np.linspace(-0.5, 1.5, n)
        f = c[0] + c[1] * y + c[2] * y**2 + c[3] * y**3
        Fy = lambda t: c[0] * t + c[1] * t**2 / 2 + c[2] * t**3 / 3 + c[3] * t**4 / 4
        out = cumulative_integral_y(f, y[1] - y[0])
        assert np.allclose(out, Fy(y) - Fy(y[0]), atol=1e-11)


class TestGrid:
    def test_from_bounds(self):
        g = Grid3.from_bounds([(0, 1, 5), (-1, 1, 3), (2, 2, 1)])
        assert g.counts == (5, 3, 1) and g.size == 15
        assert np.allclose(g.axes()[0], np.linspace(0, 1, 5))

    def test_grid_d1_margins(self):
        v = np.arange(10.0) ** 2
        d = grid_d1(v, 1.0, 0)
        assert np.all(np.isnan(d[:2])) and np.all(np.isnan(d[-2:]))
        assert np.allclose(d[2:-2], 2 * np.arange(10.0)[2:-2])

    def test_point_rejects_nan(self):
        with pytest.raises(ValueError):
            Point3(float("nan"), 0, 0)
