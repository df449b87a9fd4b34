"""Generalized Ward family built from the symmetry ``u_z = A u_x + B u_y``.

In the mirrored first-order system ``(ln u)_x = w_z, u_z = w_y``, the
symmetry ansatz turns the planar problem into

    u_x = u (A w_x + B w_y),    A u_x + B u_y = w_y.

The hodograph substitution ``x = theta(u, w), y = sigma(u, w)`` makes it
linear:

    sigma_w = (theta_u + B theta_w) / A,
    sigma_u = (B theta_u - sigma_w / u) / A,

and ``sigma`` exists iff

    u theta_uu + theta_uw / A + (B / A) theta_ww = 0.

Separable modes ``theta = e^{lam w} g(u)`` reduce this to the ODE
``u g'' + (lam/A) g' + (B lam^2/A) g = 0``.  The 3-D field is recovered by
the characteristic shift ``u(x, y, z) = v(x + A z, y + B z)``.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from ..errors import CompatibilityViolation, SingularJacobian, SingularPoint, StepFailure
from ..numcore import OK, SINGULAR, Grid3, ScalarField3, StencilConfig, d1, newton_batch
from ..residuals import ResidualReport, run_checks, pointwise

__all__ = [
    "WardMode",
    "WardParams",
    "ModeSolution",
    "WardTheta",
    "WardSigma",
    "ModalSigma",
    "HodographMap2",
    "ward_ode_g",
    "ward_theta",
    "ward_sigma",
    "theta_pde_residual",
    "loop_integral",
    "ward_invert",
    "ward_invert_array",
    "ward_field",
    "ward_fields",
    "linear_seed",
    "constraint_residual",
    "ward_limit_excess",
    "ward_verify",
    "ward_map",
]

U_FLOOR = 1e-3
_GL_X, _GL_W = np.polynomial.legendre.leggauss(32)


@dataclass(frozen=True)
class WardMode:
    lam: float
    amplitude: float
    g0: float
    g1: float


@dataclass(frozen=True)
class WardParams:
    """Symmetry direction ``(A, B)`` and a superposition of separable modes.

    Each mode's ODE solution is anchored at ``u0`` with ``g(u0) = g0`` and
    ``g'(u0) = g1``.
    """

    A: float
    B: float
    modes: tuple = ()
    u0: float = 1.0

    def __post_init__(self):
        if self.A == 0:
            raise ValueError("A must be non-zero")
        if not self.u0 > 0:
            raise ValueError("anchor u0 must be positive")
        if len(self.modes) < 1:
            raise ValueError("at least one mode is required")
        object.__setattr__(self, "modes", tuple(m if isinstance(m, WardMode) else WardMode(*m) for m in self.modes))


class ModeSolution:
    """Dense-output solution of ``u g'' + a g' + b g = 0`` around ``u0``."""

    def __init__(self, a, b, u0, g0, g1, u_range, rtol=1e-12, atol=1e-13):
        lo, hi = u_range
        if lo <= U_FLOOR:
            raise SingularPoint(f"u range {u_range} reaches the singular point u = 0")
        if not lo <= u0 <= hi:
            lo, hi = min(lo, u0), max(hi, u0)
        self.a, self.b, self.u0 = a, b, u0
        self.u_range = (lo, hi)

        def rhs(u, y):
            return [y[1], -(a * y[1] + b * y[0]) / u]

        self._pieces = []
        for end in (lo, hi):
            if end == u0:
                continue
            sol = solve_ivp(rhs, (u0, end), [g0, g1], method="DOP853", rtol=rtol, atol=atol, dense_output=True)
            if not sol.success:
                raise StepFailure(sol.message)
            self._pieces.append((min(u0, end), max(u0, end), sol.sol))
        self._g0, self._g1 = g0, g1
        self._memo = threading.local()

    def _eval(self, u):
        u = np.asarray(u, dtype=float)
        key = (u.shape, u.tobytes())
        memo = getattr(self._memo, "last", None)
        if memo is not None and memo[0] == key:
            return memo[1]
        out = self._eval_raw(u)
        self._memo.last = (key, out)
        return out

    def _eval_raw(self, u):
        g = np.full(u.shape, np.nan)
        dg = np.full(u.shape, np.nan)
        flat, gf, dgf = u.ravel(), g.ravel(), dg.ravel()
        for lo, hi, sol in self._pieces:
            m = (flat >= lo) & (flat <= hi)
            if np.any(m):
                vals = sol(flat[m])
                gf[m], dgf[m] = vals[0], vals[1]
        at0 = flat == self.u0
        gf[at0], dgf[at0] = self._g0, self._g1
        return gf.reshape(u.shape), dgf.reshape(u.shape)

    def g(self, u):
        return self._eval(u)[0]

    def dg(self, u):
        return self._eval(u)[1]

    def d2g(self, u):
        g, dg = self._eval(u)
        return -(self.a * dg + self.b * g) / np.asarray(u, dtype=float)

    def table(self, n: int = 201) -> np.ndarray:
        """Rows ``(u, g, g')`` on an even sample of the solved range."""
        u = np.linspace(*self.u_range, n)
        g, dg = self._eval(u)
        return np.column_stack([u, g, dg])


def ward_ode_g(params: WardParams, lam: float, u_range, g_init=None) -> ModeSolution:
    """Integrate the separable mode ODE for exponent ``lam`` over ``u_range``."""
    if g_init is None:
        mode = next((m for m in params.modes if m.lam == lam), None)
        if mode is None:
            raise ValueError(f"no mode with lam={lam}")
        g_init = (mode.g0, mode.g1)
    a = lam / params.A
    b = params.B * lam * lam / params.A
    return ModeSolution(a, b, params.u0, g_init[0], g_init[1], u_range)


class WardTheta:
    """theta(u, w) = sum amplitude * e^{lam w} g_lam(u), with partials."""

    def __init__(self, params: WardParams, solutions: Sequence[ModeSolution]):
        self.params = params
        self.terms = [(m.lam, m.amplitude, s) for m, s in zip(params.modes, solutions)]

    def _sum(self, u, w, wpow, kind):
        u, w = np.broadcast_arrays(np.asarray(u, dtype=float), np.asarray(w, dtype=float))
        out = np.zeros(u.shape)
        for lam, amp, sol in self.terms:
            gu = {"g": sol.g, "dg": sol.dg, "d2g": sol.d2g}[kind](u)
            out = out + amp * lam**wpow * np.exp(lam * w) * gu
        return out

    def __call__(self, u, w):
        return self._sum(u, w, 0, "g")

    def du(self, u, w):
        return self._sum(u, w, 0, "dg")

    def dw(self, u, w):
        return self._sum(u, w, 1, "g")

    def duu(self, u, w):
        return self._sum(u, w, 0, "d2g")

    def duw(self, u, w):
        return self._sum(u, w, 1, "dg")

    def dww(self, u, w):
        return self._sum(u, w, 2, "g")


def ward_theta(params: WardParams, u_range=(0.2, 5.0)) -> WardTheta:
    """Superpose the configured modes into theta(u, w)."""
    return WardTheta(params, [ward_ode_g(params, m.lam, u_range, (m.g0, m.g1)) for m in params.modes])


def _fd(fn, u, w, axis, h=1e-4):
    c = ((-2, 1 / 12), (-1, -8 / 12), (1, 8 / 12), (2, -1 / 12))
    acc = 0.0
    for k, ck in c:
        if axis == 0:
            acc = acc + ck * fn(u + k * h, w)
        else:
            acc = acc + ck * fn(u, w + k * h)
    return acc / h


def theta_pde_residual(theta, A: float, B: float, u, w, h: float = 1e-4):
    """u theta_uu + theta_uw / A + (B/A) theta_ww by differencing theta's first partials."""
    t_uu = _fd(theta.du, u, w, 0, h)
    t_uw = _fd(theta.du, u, w, 1, h)
    t_ww = _fd(theta.dw, u, w, 1, h)
    return u * t_uu + t_uw / A + (B / A) * t_ww


class WardSigma:
    """sigma(u, w) from its gradient, integrated from the anchor.

    The path runs along u at ``w = w0`` and then along w; each leg uses
    32-point Gauss-Legendre quadrature.
    """

    def __init__(self, theta, A: float, B: float, anchor):
        self.theta, self.A, self.B = theta, A, B
        self.u0, self.w0 = anchor

    def du(self, u, w):
        return (self.B * self.theta.du(u, w) - self.dw(u, w) / u) / self.A

    def dw(self, u, w):
        return (self.theta.du(u, w) + self.B * self.theta.dw(u, w)) / self.A

    def __call__(self, u, w):
        u, w = np.broadcast_arrays(np.asarray(u, dtype=float), np.asarray(w, dtype=float))
        return _line(self.du, self.u0, u, self.w0, along_u=True) + _line(self.dw, self.w0, w, u, along_u=False)


def _line(fn, start, end, fixed, along_u):
    """Integral of fn along one coordinate from ``start`` to ``end``."""
    end = np.asarray(end, dtype=float)
    fixed = np.broadcast_to(np.asarray(fixed, dtype=float), end.shape)
    half = 0.5 * (end - start)
    mid = 0.5 * (end + start)
    nodes = mid[..., None] + half[..., None] * _GL_X
    other = np.broadcast_to(fixed[..., None], nodes.shape)
    vals = fn(nodes, other) if along_u else fn(other, nodes)
    return half * np.sum(vals * _GL_W, axis=-1)


def loop_integral(du: Callable, dw: Callable, rect) -> float:
    """Counter-clockwise integral of ``du d(u) + dw d(w)`` around a rectangle."""
    u1, u2, w1, w2 = rect

    def leg(fn, a, b, fixed, along_u):
        return float(_line(fn, a, np.asarray(b), np.asarray(fixed), along_u))

    return (
        leg(du, u1, u2, w1, True)
        + leg(dw, w1, w2, u2, False)
        + leg(du, u2, u1, w2, True)
        + leg(dw, w2, w1, u1, False)
    )


class ModalSigma(WardSigma):
    """sigma from the per-mode antiderivative.

    For ``lam != 0`` a mode contributes ``e^{lam w} (g' + B lam g) / (lam A)``;
    a ``lam = 0`` mode has linear ``g`` with slope ``c2`` and contributes
    ``c2 (w + B u - ln u) / A``.  Both have exactly the gradient of
    ``WardSigma``.  The constant is fixed by ``sigma(anchor) = 0``.
    """

    def __init__(self, theta, A, B, anchor):
        super().__init__(theta, A, B, anchor)
        self._offset = 0.0
        self._offset = float(self._raw(np.float64(self.u0), np.float64(self.w0)))

    def _raw(self, u, w):
        u, w = np.broadcast_arrays(np.asarray(u, dtype=float), np.asarray(w, dtype=float))
        out = np.zeros(u.shape)
        A, B = self.A, self.B
        for lam, amp, sol in self.theta.terms:
            if lam == 0:
                out = out + amp * sol.dg(u) * (w + B * u - np.log(u)) / A
            else:
                out = out + amp * np.exp(lam * w) * (sol.dg(u) + B * lam * sol.g(u)) / (lam * A)
        return out

    def __call__(self, u, w):
        return self._raw(u, w) - self._offset


def ward_sigma(theta, params: WardParams, anchor, test_rect=None, tol: float = 1e-7, method: str = "modal") -> WardSigma:
    """Reconstruct sigma from theta; ``sigma(anchor) = 0``.

    ``method="path"`` integrates the gradient along u then w by quadrature
    and works for any theta; ``"modal"`` (default, needs ``WardTheta``)
    sums the per-mode antiderivatives and is much cheaper to evaluate.
    The gradient form is closed only when theta solves its second-order
    equation; a loop integral over ``test_rect`` (default: the unit square
    above the anchor) larger than ``tol`` raises ``CompatibilityViolation``.
    """
    if method == "modal" and isinstance(theta, WardTheta):
        sigma = ModalSigma(theta, params.A, params.B, anchor)
    elif method in ("modal", "path"):
        sigma = WardSigma(theta, params.A, params.B, anchor)
    else:
        raise ValueError(f"unknown sigma method {method!r}")
    u0, w0 = anchor
    rect = test_rect if test_rect is not None else (u0, u0 + 1.0, w0, w0 + 1.0)
    loop = loop_integral(sigma.du, sigma.dw, rect)
    if not abs(loop) <= tol:
        raise CompatibilityViolation(f"loop integral {loop:.3e} exceeds {tol:g}")
    sigma.loop = loop
    return sigma


@dataclass
class HodographMap2:
    theta: object
    sigma: object
    anchor: tuple

    def jacobian(self, u, w):
        """d(x, y)/d(u, w), stacked on the last two axes."""
        t_u, t_w = self.theta.du(u, w), self.theta.dw(u, w)
        s_u, s_w = self.sigma.du(u, w), self.sigma.dw(u, w)
        return np.stack([np.stack([t_u, t_w], -1), np.stack([s_u, s_w], -1)], -2)

    def D(self, u, w):
        return self.theta.du(u, w) * self.sigma.dw(u, w) - self.theta.dw(u, w) * self.sigma.du(u, w)

    def planar_derivatives(self, u, w):
        """(u_x, u_y, w_x, w_y) from the inverse-function formulas."""
        D = self.D(u, w)
        return (
            self.sigma.dw(u, w) / D,
            -self.theta.dw(u, w) / D,
            -self.sigma.du(u, w) / D,
            self.theta.du(u, w) / D,
        )


def ward_map(params: WardParams, u_range=(0.2, 5.0), anchor=None, test_rect=None, sigma_method: str = "modal") -> HodographMap2:
    """theta, sigma and the hodograph map for a parameter set."""
    theta = ward_theta(params, u_range)
    anchor = anchor if anchor is not None else (params.u0, 0.0)
    if test_rect is None:
        lo, hi = u_range
        test_rect = (max(lo, anchor[0] - 0.5), min(hi, anchor[0] + 0.5), anchor[1] - 0.5, anchor[1] + 0.5)
    sigma = ward_sigma(theta, params, anchor, test_rect, method=sigma_method)
    return HodographMap2(theta, sigma, anchor)


def ward_invert_array(hmap: HodographMap2, X, Y, guess_u, guess_w, tol: float = 1e-12, max_iter: int = 60):
    """Vectorised inversion of (theta, sigma) = (X, Y); returns (u, w, status).

    The Newton Jacobian is d(x, y)/d(u, w); its inverse is the planar
    derivative matrix ((u_x, u_y), (w_x, w_y)) of ``planar_derivatives``.
    """
    X, Y, gu, gw = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (X, Y, guess_u, guess_w)))
    shape = X.shape

    def G(V, xt, yt):
        u, w = V[:, 0], V[:, 1]
        return np.stack([hmap.theta(u, w) - xt, hmap.sigma(u, w) - yt], -1)

    def J(V, xt, yt):
        return hmap.jacobian(V[:, 0], V[:, 1])

    guess = np.stack([gu.ravel(), gw.ravel()], -1)
    res = newton_batch(G, guess, J, tol=tol, max_iter=max_iter, args=(X.ravel(), Y.ravel()))
    u, w = res.x[:, 0].copy(), res.x[:, 1].copy()
    u[~res.ok] = np.nan
    w[~res.ok] = np.nan
    return u.reshape(shape), w.reshape(shape), res.status.reshape(shape)


def ward_invert(hmap: HodographMap2, x: float, y: float, guess, tol: float = 1e-12):
    """Invert the hodograph map at one point; raises ``SingularJacobian`` at a caustic."""
    u, w, status = ward_invert_array(hmap, x, y, guess[0], guess[1], tol)
    st = int(status)
    if st == SINGULAR:
        raise SingularJacobian("hodograph Jacobian D vanishes")
    if st != OK:
        from ..errors import NoConvergence

        raise NoConvergence("hodograph inversion did not converge")
    return float(u), float(w)


def linear_seed(hmap: HodographMap2, about=None):
    """Seed ``(x, y) -> (u, w)`` from the map linearised at ``about`` (default: anchor)."""
    u0, w0 = about if about is not None else hmap.anchor
    x0, y0 = float(hmap.theta(u0, w0)), float(hmap.sigma(u0, w0))
    Jinv = np.linalg.inv(hmap.jacobian(np.float64(u0), np.float64(w0)))

    def seed(X, Y):
        dx, dy = np.asarray(X) - x0, np.asarray(Y) - y0
        return u0 + Jinv[0, 0] * dx + Jinv[0, 1] * dy, w0 + Jinv[1, 0] * dx + Jinv[1, 1] * dy

    return seed


class _PlanarInverse:
    """Planar solution (v, w) at shifted coordinates, cached per call shape."""

    def __init__(self, hmap, params, seed, tol):
        self.hmap, self.params, self.seed, self.tol = hmap, params, seed, tol
        self.failures = 0

    def __call__(self, x, y, z):
        x, y, z = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (x, y, z)))
        X = x + self.params.A * z
        Y = y + self.params.B * z
        gu, gw = self.seed(X, Y)
        u, w, status = ward_invert_array(self.hmap, X, Y, gu, gw, self.tol)
        self.failures += int(np.sum(status != OK))
        with np.errstate(invalid="ignore"):
            bad = ~(u > U_FLOOR)
        u[bad] = np.nan
        w[bad] = np.nan
        return u, w


def ward_fields(hmap: HodographMap2, params: WardParams, seed=None, tol: float = 1e-13):
    """Fields ``u`` and ``w`` of the mirrored first-order system.

    Both are the planar inverse of the hodograph map evaluated at
    ``(x + A z, y + B z)``.  ``seed(X, Y) -> (u, w)`` provides Newton
    starting values; the default linearises the map at its anchor.
    Points where the inversion fails are outside the domain.
    """
    inv = _PlanarInverse(hmap, params, seed if seed is not None else linear_seed(hmap), tol)
    u = ScalarField3(lambda x, y, z: inv(x, y, z)[0], name=f"ward[A={params.A},B={params.B}].u", implicit_domain=True)
    w = ScalarField3(lambda x, y, z: inv(x, y, z)[1], name=f"ward[A={params.A},B={params.B}].w", implicit_domain=True)
    return u, w


def ward_field(hmap: HodographMap2, params: WardParams, seed=None, tol: float = 1e-13) -> ScalarField3:
    """u(x, y, z) = v(x + A z, y + B z) for the planar inverse v."""
    return ward_fields(hmap, params, seed, tol)[0]


def constraint_residual(u, A: float, B: float, cfg: StencilConfig):
    """Pointwise ``u_z - A u_x - B u_y``."""
    ev = u.values if isinstance(u, ScalarField3) else u

    def fn(x, y, z):
        return d1(ev, x, y, z, "z", cfg) - A * d1(ev, x, y, z, "x", cfg) - B * d1(ev, x, y, z, "y", cfg)

    return fn


def ward_limit_excess(u, Lam: float, cfg: StencilConfig, eps: float = 1e-6):
    """Pointwise ``|u_x - u_y| - (|u_z| + eps) / Lam``; non-positive when the bound holds."""
    ev = u.values if isinstance(u, ScalarField3) else u

    def fn(x, y, z):
        ux, uy, uz = (d1(ev, x, y, z, ax, cfg) for ax in "xyz")
        return np.abs(ux - uy) - (np.abs(uz) + eps) / Lam

    return fn


def ward_verify(hmap: HodographMap2, params: WardParams, grid: Grid3, cfg: StencilConfig = StencilConfig(), seed=None, threads: int = 1) -> list[ResidualReport]:
    """Constraint, Toda and mirrored-system reports for a Ward field."""
    u, w = ward_fields(hmap, params, seed)
    name = f"ward[A={params.A},B={params.B},modes={len(params.modes)}]"
    checks = [
        ("constraint", constraint_residual(u, params.A, params.B, cfg)),
        ("toda", pointwise("toda", u, cfg=cfg)),
        ("system3.r1", pointwise("system3.r1", u, w, cfg=cfg)),
        ("system3.r2", pointwise("system3.r2", u, w, cfg=cfg)),
    ]
    return run_checks(checks, grid, cfg, name, threads)
