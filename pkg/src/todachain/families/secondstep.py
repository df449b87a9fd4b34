"""Second-step family in the variables ``a = U_x, b = U_z, c = ln U_y``.

With ``alpha = (b^2 + a) / 2`` the hodograph problem is linearised through
a potential ``Q(alpha, b, c)`` obeying

    Q_aa = 2 Q_bc,                                  (Q1)
    Q_ab + b Q_aa + alpha Q_ac = Q_cc,              (Q2)

(subscript ``a`` here meaning ``alpha``).  The coordinates follow from
``R = Q_alpha``:

    x = R_a,    z = R_b + f(b),    e^c y = R_c,

with ``(a, b, c)``-derivatives taken by the chain rule
``d/da = d/dalpha / 2``, ``d/db|_a = d/db|_alpha + b d/dalpha``.

Superpositions of ``K = exp(k alpha + p b + (k^2 / 2p) c)`` satisfy (Q1)
node by node.  (Q2) holds after integration by parts when the spectral
weight solves ``2p F_p + k F_k = (2p^2/k - k^2/(2p)) F`` with ``f = F/k^3``.
A finite node sum does not satisfy (Q2); the measure concentrated on the
characteristic ``k^2/p = -2m`` does, up to quadrature error, because the
residual density becomes an exact ``k``-derivative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp

from ..errors import DivisionByZero, NoConvergence, NonFinite, SingularJacobian, SingularMatrix, StepFailure
from ..numcore import NONFINITE, OK, SINGULAR, Grid3, Point3, ScalarField3, StencilConfig, d1, d2, newton_batch
from ..residuals import ResidualReport, run_checks, derivative_field, pointwise

__all__ = [
    "StateABC",
    "build_L",
    "trace_identity_check",
    "kernel",
    "F_pde_residual",
    "F_characteristic_solve",
    "printed_F",
    "rederived_F",
    "characteristic_line_F",
    "SpectralMeasure",
    "characteristic_measure",
    "box_measure",
    "PotentialQ",
    "build_Q",
    "q_equation1_residual",
    "q_equation2_residual",
    "q_equation2_nodewise",
    "SecondStepMaps",
    "secondstep_XYZ",
    "secondstep_invert",
    "secondstep_states",
    "secondstep_fields",
    "secondstep_verify",
    "working_grid",
]


@dataclass(frozen=True)
class StateABC:
    a: float
    b: float
    c: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.a, self.b, self.c)):
            raise NonFinite("state must be finite")

    @property
    def alpha(self) -> float:
        return 0.5 * (self.b * self.b + self.a)

    @property
    def u(self) -> float:
        return math.exp(self.c)

    def as_array(self) -> np.ndarray:
        return np.array([self.a, self.b, self.c])


def build_L(state: StateABC) -> np.ndarray:
    """Rows ``[0, 1, 0], [0, 0, 1], [1/2, b, alpha]``; ``det = 1/2``."""
    return np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.5, state.b, state.alpha]])


def trace_identity_check(V, L, n_max: int = 4) -> float:
    """max over ``n <= n_max`` of ``|Tr((V L V^-1)^n) - Tr(L^n)|``."""
    V = np.asarray(V, dtype=float)
    if not abs(np.linalg.det(V)) > 1e-12:
        raise SingularMatrix("conjugating matrix is singular")
    M = V @ L @ np.linalg.inv(V)
    dev, A, B = 0.0, np.eye(3), np.eye(3)
    for _ in range(int(n_max)):
        A, B = A @ M, B @ L
        dev = max(dev, abs(np.trace(A) - np.trace(B)))
    return dev


def _q(k, p):
    p = np.asarray(p, dtype=float)
    if np.any(p == 0):
        raise DivisionByZero("spectral parameter p = 0")
    return np.asarray(k, dtype=float) ** 2 / (2 * p)


def kernel(k, p, alpha, b, c):
    """``exp(k alpha + p b + (k^2 / 2p) c)``."""
    return np.exp(k * alpha + p * b + _q(k, p) * c)


# --- spectral weight -------------------------------------------------------


def printed_F(phi: Callable = None) -> Callable:
    """Printed closed form ``exp(p^2/(3k) + (ln k / 2) k^2/p) phi(k^2/p)``."""
    phi = phi or (lambda xi: 1.0)

    def F(k, p):
        k, p = np.asarray(k, dtype=float), np.asarray(p, dtype=float)
        return np.exp(p * p / (3 * k) + 0.5 * np.log(np.abs(k)) * k * k / p) * phi(k * k / p)

    return F


def rederived_F(phi: Callable = None) -> Callable:
    """Characteristic solution ``exp((2/3) p^2/k - (k^2/2p) ln|k|) phi(k^2/p)``."""
    phi = phi or (lambda xi: 1.0)

    def F(k, p):
        k, p = np.asarray(k, dtype=float), np.asarray(p, dtype=float)
        return np.exp(2 * p * p / (3 * k) - k * k / (2 * p) * np.log(np.abs(k))) * phi(k * k / p)

    return F


def F_pde_residual(F_form: Callable, k, p, h: float = 1e-4) -> np.ndarray:
    """``(2p F_p + k F_k) / F - (2p^2/k - k^2/(2p))`` by 4th-order differences.

    Scaled by ``F`` so that exponentially large weights are comparable;
    ``F = 0`` gives 0.
    """
    k, p = np.broadcast_arrays(np.asarray(k, dtype=float), np.asarray(p, dtype=float))
    if np.any(k == 0) or np.any(p == 0):
        raise DivisionByZero("F equation needs k != 0 and p != 0")
    hk, hp = h * np.maximum(1, np.abs(k)), h * np.maximum(1, np.abs(p))
    c = ((-2, 1 / 12), (-1, -8 / 12), (1, 8 / 12), (2, -1 / 12))
    F0 = np.asarray(F_form(k, p), dtype=float)
    Fk = sum(ck * F_form(k + j * hk, p) for j, ck in c) / hk
    Fp = sum(ck * F_form(k, p + j * hp) for j, ck in c) / hp
    with np.errstate(all="ignore"):
        out = (2 * p * Fp + k * Fk) / F0 - (2 * p * p / k - k * k / (2 * p))
    return np.where(F0 == 0, 0.0, out)


def F_characteristic_solve(phi: Callable, k0: float, p0: float, s_end: float, F0: float | None = None, rtol: float = 1e-13):
    """Integrate the F equation along ``(k0 e^s, p0 e^{2s})``.

    The state is ``(ln|k|, ln|p|, ln F)``, so the invariant ``k^2/p`` stays
    constant to round-off.  Returns ``(k, p, F, invariant_drift)`` at
    ``s_end``; ``F0`` overrides the start value ``phi(k0^2/p0)``.
    """
    if k0 == 0 or p0 == 0:
        raise DivisionByZero("characteristic needs k0 != 0 and p0 != 0")
    sk, sp = math.copysign(1.0, k0), math.copysign(1.0, p0)
    start = float(F0) if F0 is not None else float(phi(k0 * k0 / p0))
    if start == 0:
        return k0 * math.exp(s_end), p0 * math.exp(2 * s_end), 0.0, 0.0
    sF = math.copysign(1.0, start)

    def rhs(s, y):
        k, p = sk * math.exp(y[0]), sp * math.exp(y[1])
        return [1.0, 2.0, 2 * p * p / k - k * k / (2 * p)]

    y0 = [math.log(abs(k0)), math.log(abs(p0)), math.log(abs(start))]
    if s_end == 0:
        y = y0
    else:
        sol = solve_ivp(rhs, (0.0, s_end), y0, method="DOP853", rtol=rtol, atol=1e-14)
        if not sol.success:
            raise StepFailure(sol.message)
        y = sol.y[:, -1]
    k, p = sk * math.exp(y[0]), sp * math.exp(y[1])
    drift = abs(k * k / p - k0 * k0 / p0) / max(1.0, abs(k0 * k0 / p0))
    return k, p, sF * math.exp(y[2]), drift


def characteristic_line_F(m: float) -> Callable:
    """Weight ``k^3 |k|^{m-1} exp(k^3 / (6 m^2))`` for nodes on ``k^2/p = -2m``.

    This is a density per unit ``k`` along the line.  The planar density it
    represents is ``H delta(k^2/p + 2m)`` with ``H = F * 4 m^2 / k^2``
    (the delta's Jacobian), and it is ``H`` that solves the first-order F
    equation.
    """

    def F(k, p):
        k = np.asarray(k, dtype=float)
        return k**3 * np.abs(k) ** (m - 1) * np.exp(k**3 / (6 * m * m))

    return F


# --- measures and potential -------------------------------------------------


@dataclass(frozen=True)
class SpectralMeasure:
    """Finite node set ``(k_i, p_i, w_i)``."""

    k: np.ndarray
    p: np.ndarray
    w: np.ndarray
    label: str = "nodes"

    def __post_init__(self):
        k, p, w = (np.atleast_1d(np.asarray(a, dtype=float)) for a in (self.k, self.p, self.w))
        if not (k.shape == p.shape == w.shape and k.ndim == 1):
            raise ValueError("k, p, w must be 1-D arrays of equal length")
        if np.any(k == 0) or np.any(p == 0):
            raise DivisionByZero("spectral nodes need k != 0 and p != 0")
        if not np.all(np.isfinite(w)) or not np.all(np.isfinite(k)) or not np.all(np.isfinite(p)):
            raise NonFinite("spectral nodes must be finite")
        for name, v in (("k", k), ("p", p), ("w", w)):
            object.__setattr__(self, name, v)

    @classmethod
    def from_nodes(cls, nodes, label: str = "nodes") -> "SpectralMeasure":
        arr = np.asarray(nodes, dtype=float).reshape(-1, 3)
        return cls(arr[:, 0], arr[:, 1], arr[:, 2], label)

    @property
    def size(self) -> int:
        return int(self.k.size)


def _composite_gl(lo, hi, panels, order):
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(lo, hi, panels + 1)
    nodes, weights = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        nodes.append(0.5 * (b - a) * x + 0.5 * (a + b))
        weights.append(0.5 * (b - a) * w)
    return np.concatenate(nodes), np.concatenate(weights)


def characteristic_measure(m: float = 1.0, t_max: float = 12.0, panels: int = 12, order: int = 16) -> SpectralMeasure:
    """Nodes ``k = -t``, ``p = -k^2 / (2m)`` for ``t`` in ``(0, t_max]``.

    Composite Gauss-Legendre in ``t``; pair with ``characteristic_line_F(m)``.
    The cube in the weight's exponent makes the truncation at ``t_max``
    negligible for moderate ``alpha``.
    """
    if not m > 0:
        raise ValueError("m must be positive")
    t, w = _composite_gl(0.0, t_max, panels, order)
    k = -t
    return SpectralMeasure(k, -k * k / (2 * m), w, f"characteristic(m={m})")


def box_measure(k_range, p_range, n: int = 8) -> SpectralMeasure:
    """Tensor Gauss-Legendre nodes on a ``(k, p)`` box (must exclude 0)."""
    kx, kw = _composite_gl(*k_range, 1, n)
    px, pw = _composite_gl(*p_range, 1, n)
    K, P = np.meshgrid(kx, px, indexing="ij")
    W = np.outer(kw, pw)
    return SpectralMeasure(K.ravel(), P.ravel(), W.ravel(), f"box{tuple(k_range)}x{tuple(p_range)}")


class PotentialQ:
    """``Q = sum c_i exp(k_i alpha + p_i b + q_i c)`` with ``q_i = k_i^2 / (2 p_i)``.

    ``c_i = w_i F(k_i, p_i) / k_i^3``.  Partials of any order are exact:
    each derivative multiplies the node term by ``k``, ``p`` or ``q``.
    """

    def __init__(self, k, p, coef, chunk: int = 4096):
        self.k = np.asarray(k, dtype=float)
        self.p = np.asarray(p, dtype=float)
        self.q = _q(self.k, self.p) if self.k.size else np.zeros(0)
        self.coef = np.asarray(coef, dtype=float)
        self.chunk = chunk

    @property
    def size(self) -> int:
        return int(self.k.size)

    def partials(self, orders, alpha, b, c) -> list:
        """Evaluate ``d^{i+j+l} Q / dalpha^i db^j dc^l`` for each ``(i, j, l)`` in ``orders``."""
        alpha, b, c = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (alpha, b, c)))
        shape = alpha.shape
        A, B, C = alpha.ravel(), b.ravel(), c.ravel()
        outs = [np.zeros(A.size) for _ in orders]
        if self.size == 0:
            return [o.reshape(shape) for o in outs]
        facs = [self.coef * self.k**i * self.p**j * self.q**l for i, j, l in orders]
        for s in range(0, A.size, self.chunk):
            e = slice(s, s + self.chunk)
            with np.errstate(over="ignore", invalid="ignore"):
                K = np.exp(np.outer(A[e], self.k) + np.outer(B[e], self.p) + np.outer(C[e], self.q))
            for o, f in zip(outs, facs):
                # row-wise sums keep each point independent of the batch shape
                o[e] = np.sum(K * f, axis=1)
        return [o.reshape(shape) for o in outs]

    def __call__(self, alpha, b, c):
        return self.partials([(0, 0, 0)], alpha, b, c)[0]

    def d(self, i, j, l, alpha, b, c):
        return self.partials([(i, j, l)], alpha, b, c)[0]


def build_Q(measure: SpectralMeasure, F_form: Callable) -> PotentialQ:
    """``Q = sum w (F / k^3) kernel`` over the measure's nodes."""
    if measure.size == 0:
        return PotentialQ([], [], [])
    F = np.asarray(F_form(measure.k, measure.p), dtype=float) * np.ones(measure.size)
    coef = measure.w * F / measure.k**3
    if not np.all(np.isfinite(coef)):
        raise NonFinite("spectral weight not finite at some node")
    return PotentialQ(measure.k, measure.p, coef)


def q_equation1_residual(Q: PotentialQ, alpha, b, c, method: str = "analytic", h: float = 5e-2):
    """``Q_aa - 2 Q_bc``; ``method="fd"`` uses Richardson-extrapolated 4th-order stencils."""
    if method == "analytic":
        Qaa, Qbc = Q.partials([(2, 0, 0), (0, 1, 1)], alpha, b, c)
    elif method == "fd":
        alpha, b, c = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (alpha, b, c)))
        cfg = StencilConfig(h=h, order=4, richardson_levels=2, relative=False)
        Qaa = d2(Q.__call__, alpha, b, c, "x", cfg)
        Qbc = _d11(Q.__call__, alpha, b, c, (1, 2), cfg)
    else:
        raise ValueError(f"unknown method {method!r}")
    return Qaa - 2 * Qbc


def q_equation2_residual(Q: PotentialQ, alpha, b, c, method: str = "analytic", h: float = 1e-3):
    """``Q_ab + b Q_aa + alpha Q_ac - Q_cc`` (``a`` = alpha).

    ``method="fd"`` differentiates ``Q`` by 4th-order central differences
    instead of using the exact node partials.
    """
    alpha, b, c = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (alpha, b, c)))
    if method == "analytic":
        Qab, Qaa, Qac, Qcc = Q.partials([(1, 1, 0), (2, 0, 0), (1, 0, 1), (0, 0, 2)], alpha, b, c)
    elif method == "fd":
        cfg = StencilConfig(h=h, order=4, relative=False)
        ev = Q.__call__
        Qab = _d11(ev, alpha, b, c, (0, 1), cfg)
        Qac = _d11(ev, alpha, b, c, (0, 2), cfg)
        Qaa = d2(ev, alpha, b, c, "x", cfg)
        Qcc = d2(ev, alpha, b, c, "z", cfg)
    else:
        raise ValueError(f"unknown method {method!r}")
    return Qab + b * Qaa + alpha * Qac - Qcc


def _d11(ev, a, b, c, axes, cfg):
    from ..numcore import d11

    names = "xyz"
    return d11(ev, a, b, c, (names[axes[0]], names[axes[1]]), cfg)


def q_equation2_nodewise(Q: PotentialQ, alpha, b, c):
    """Closed form of the (Q2) residual: node sum of ``(kp + b k^2 + alpha k^3/(2p) - k^4/(4p^2)) c_i K_i``."""
    k, p = Q.k, Q.p
    sub = PotentialQ(k, p, Q.coef * (k * p - k**4 / (4 * p * p)))
    sub_b = PotentialQ(k, p, Q.coef * k * k)
    sub_a = PotentialQ(k, p, Q.coef * k**3 / (2 * p))
    return sub(alpha, b, c) + b * sub_b(alpha, b, c) + alpha * sub_a(alpha, b, c)


# --- coordinate maps --------------------------------------------------------

_ORDERS = [(2, 0, 0), (1, 1, 0), (1, 0, 1), (3, 0, 0), (2, 1, 0), (2, 0, 1), (1, 2, 0), (1, 1, 1), (1, 0, 2)]


@dataclass
class SecondStepMaps:
    """``X``, ``Z``, ``Ytilde`` as functions of ``(a, b, c)`` with Jacobian.

    ``f`` is the free function of ``b`` in ``Z``, given as polynomial
    coefficients in increasing degree.
    """

    Q: PotentialQ
    f: tuple = ()

    def _f(self, b):
        P = np.polynomial.Polynomial(self.f or (0.0,))
        return P(b), P.deriv(1)(b)

    def evaluate(self, a, b, c, jacobian: bool = False):
        """Return ``(X, Z, Yt)`` and, if requested, the 3x3 Jacobian in ``(a, b, c)``."""
        a, b, c = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (a, b, c)))
        alpha = 0.5 * (b * b + a)
        if not jacobian:
            Q200, Q110, Q101 = self.Q.partials(_ORDERS[:3], alpha, b, c)
            fb, _ = self._f(b)
            return 0.5 * Q200, Q110 + b * Q200 + fb, Q101
        Q200, Q110, Q101, Q300, Q210, Q201, Q120, Q111, Q102 = self.Q.partials(_ORDERS, alpha, b, c)
        fb, dfb = self._f(b)
        X = 0.5 * Q200
        Z = Q110 + b * Q200 + fb
        Yt = Q101
        J = np.empty(a.shape + (3, 3))
        J[..., 0, 0] = 0.25 * Q300
        J[..., 0, 1] = 0.5 * (Q210 + b * Q300)
        J[..., 0, 2] = 0.5 * Q201
        J[..., 1, 0] = 0.5 * (Q210 + b * Q300)
        J[..., 1, 1] = Q120 + 2 * b * Q210 + Q200 + dfb + b * b * Q300
        J[..., 1, 2] = Q111 + b * Q201
        J[..., 2, 0] = 0.5 * Q201
        J[..., 2, 1] = Q111 + b * Q201
        J[..., 2, 2] = Q102
        return (X, Z, Yt), J

    def forward(self, a, b, c):
        """``(x, y, z)`` of a state: ``y = e^{-c} Ytilde``."""
        X, Z, Yt = self.evaluate(a, b, c)
        return X, np.exp(-np.asarray(c, dtype=float)) * Yt, Z


def secondstep_XYZ(Q: PotentialQ, f=()) -> SecondStepMaps:
    """Coordinate maps ``X = R_a``, ``Z = R_b + f(b)``, ``Ytilde = R_c`` with ``R = Q_alpha``."""
    return SecondStepMaps(Q, tuple(f))


def _system(maps: SecondStepMaps):
    def G(V, x, y, z):
        a, b, c = V[:, 0], V[:, 1], V[:, 2]
        X, Z, Yt = maps.evaluate(a, b, c)
        return np.stack([X - x, Z - z, np.exp(-c) * Yt - y], -1)

    def J(V, x, y, z):
        a, b, c = V[:, 0], V[:, 1], V[:, 2]
        (X, Z, Yt), Jm = maps.evaluate(a, b, c, jacobian=True)
        out = np.empty_like(Jm)
        out[:, 0, :] = Jm[:, 0, :]
        out[:, 1, :] = Jm[:, 1, :]
        e = np.exp(-c)
        out[:, 2, 0] = e * Jm[:, 2, 0]
        out[:, 2, 1] = e * Jm[:, 2, 1]
        out[:, 2, 2] = e * (Jm[:, 2, 2] - Yt)
        return out

    return G, J


def linear_seed(maps: SecondStepMaps, s0: StateABC):
    """Seed ``(x, y, z) -> (a, b, c)`` from the forward map linearised at ``s0``."""
    G, J = _system(maps)
    v0 = s0.as_array()[None, :]
    z3 = np.zeros(1)
    p0 = G(v0, z3, z3, z3)[0]  # forward values (x0, z0, y0)
    Jinv = np.linalg.inv(J(v0, z3, z3, z3)[0])

    def seed(x, y, z):
        d = np.stack([np.asarray(x) - p0[0], np.asarray(z) - p0[1], np.asarray(y) - p0[2]], -1)
        return s0.as_array() + d @ Jinv.T

    return seed


def secondstep_states(maps: SecondStepMaps, x, y, z, seed, tol: float = 1e-12, max_iter: int = 60):
    """Vectorised inversion; returns ``(a, b, c, status)``.

    ``seed`` is a ``StateABC`` (linearised seeding around it) or a callable
    ``(x, y, z) -> (..., 3)`` array.
    """
    x, y, z = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (x, y, z)))
    shape = x.shape
    if isinstance(seed, StateABC):
        seed = linear_seed(maps, seed)
    guess = np.asarray(seed(x.ravel(), y.ravel(), z.ravel()), dtype=float).reshape(-1, 3)
    G, J = _system(maps)
    res = newton_batch(G, guess, J, tol=tol, max_iter=max_iter, args=(x.ravel(), y.ravel(), z.ravel()))
    out = res.x.copy()
    out[~res.ok] = np.nan
    return out[:, 0].reshape(shape), out[:, 1].reshape(shape), out[:, 2].reshape(shape), res.status.reshape(shape)


def secondstep_invert(maps: SecondStepMaps, p: Point3, guess: StateABC, tol: float = 1e-12) -> StateABC:
    """Solve ``x = X, z = Z, y = e^{-c} Ytilde`` by damped Newton from ``guess``."""
    g = guess.as_array()
    a, b, c, st = secondstep_states(maps, p.x, p.y, p.z, lambda *_: g[None, :], tol)
    st = int(st)
    if st == SINGULAR:
        raise SingularJacobian("coordinate-map Jacobian is singular")
    if st == NONFINITE:
        raise NonFinite("coordinate maps not finite")
    if st != OK:
        raise NoConvergence("second-step inversion did not converge")
    return StateABC(float(a), float(b), float(c))


@dataclass
class SecondStepFields:
    u: ScalarField3
    T: ScalarField3


def secondstep_fields(maps: SecondStepMaps, seed, tol: float = 1e-12) -> SecondStepFields:
    """``u = e^c`` and ``T = e^c alpha`` at the inverted state."""
    if isinstance(seed, StateABC):
        seed = linear_seed(maps, seed)

    def u(x, y, z):
        return np.exp(secondstep_states(maps, x, y, z, seed, tol)[2])

    def T(x, y, z):
        a, b, c, _ = secondstep_states(maps, x, y, z, seed, tol)
        return np.exp(c) * 0.5 * (b * b + a)

    return SecondStepFields(
        ScalarField3(u, name="secondstep.u", implicit_domain=True),
        ScalarField3(T, name="secondstep.T", implicit_domain=True),
    )


def working_grid(maps: SecondStepMaps, s0: StateABC, half_width=(0.05, 0.05, 0.05), n: int = 11) -> Grid3:
    """Grid centred on the image of ``s0`` under the forward map."""
    x0, y0, z0 = (float(v) for v in maps.forward(s0.a, s0.b, s0.c))
    hx, hy, hz = half_width
    return Grid3.from_bounds([(x0 - hx, x0 + hx, n), (y0 - hy, y0 + hy, n), (z0 - hz, z0 + hz, n)])


def secondstep_verify(maps: SecondStepMaps, grid: Grid3, seed, cfg: StencilConfig = StencilConfig(), threads: int = 1) -> list[ResidualReport]:
    """Toda, T-system, T-symmetry and symmetry-of-``T_x`` reports for ``u = e^c``."""
    F = secondstep_fields(maps, seed)

    def tsymmetry(x, y, z):
        Tx = derivative_field(F.T, "x", cfg).values
        return d1(lambda a, b, c: Tx(a, b, c) / F.u.values(a, b, c), x, y, z, "y", cfg) - d2(F.T.values, x, y, z, "z", cfg)

    checks = [
        ("toda", pointwise("toda", F.u, cfg=cfg)),
        ("system2.r1", pointwise("system2.r1", F.u, F.T, cfg=cfg)),
        ("system2.r2", pointwise("system2.r2", F.u, F.T, cfg=cfg)),
        ("tsymmetry", tsymmetry),
        ("symmetry", pointwise("symmetry", F.u, derivative_field(F.T, "x", cfg), cfg=cfg)),
    ]
    name = f"secondstep[nodes={maps.Q.size},f={list(maps.f)}]"
    return run_checks(checks, grid, cfg, name, threads)
