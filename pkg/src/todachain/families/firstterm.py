"""First-term family: solutions with ``ln u = U_z^2 / 2 + U_x`` and ``u = U_y``.

Writing ``beta = U_x``, ``gamma = U_z`` and Legendre-transforming ``U`` in
``(x, z)`` gives a generating function ``W(beta, gamma; y)`` with

    x = W_beta,    z = W_gamma,    u = exp(gamma^2 / 2 + beta).

``W`` splits into a particular term ``s * y * exp(gamma^2/2 + beta)`` and a
y-independent part ``W_L`` that must solve a linear second-order equation

    c_bg W_bg + c_gg W_gg + c_bb W_bb = 0.

Two coefficient readings are provided: ``PRINTED_COEFFS`` ``(-2, 1, -1)`` and
``REDERIVED_COEFFS`` ``(gamma, -1, 1)``.  Only the second one annihilates
the particular term with ``s = -1``; the verifier decides which readings
produce Toda solutions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import NoConvergence, NonFinite, SingularJacobian
from ..numcore import NONFINITE, OK, SINGULAR, Grid3, Point3, ScalarField3, StencilConfig, d1, d2, newton_batch
from ..residuals import ResidualReport, run_checks, derivative_field, pointwise

__all__ = [
    "ExpPolyWL",
    "SumWL",
    "GeneratingFunction",
    "FirstTermState",
    "PRINTED_COEFFS",
    "REDERIVED_COEFFS",
    "linear_pde_residual",
    "separable_WL",
    "polynomial_WL",
    "printed_example_gf",
    "closed_form_state",
    "firstterm_solve",
    "firstterm_states",
    "firstterm_fields",
    "firstterm_field",
    "firstterm_verify",
]


def gamma_coeff(beta, gamma):
    """Coefficient equal to ``gamma`` (for the variable-coefficient reading)."""
    return gamma


PRINTED_COEFFS = (-2.0, 1.0, -1.0)
REDERIVED_COEFFS = (gamma_coeff, -1.0, 1.0)


@dataclass(frozen=True)
class ExpPolyWL:
    """``amplitude * exp(k beta + r gamma) * P(gamma)``.

    ``poly`` lists the coefficients of ``P`` in increasing degree.  Constants,
    pure exponentials and polynomial modes are all special cases.
    """

    amplitude: float = 1.0
    k: float = 0.0
    r: float = 0.0
    poly: tuple = (1.0,)

    def _parts(self, beta, gamma):
        beta, gamma = np.broadcast_arrays(np.asarray(beta, dtype=float), np.asarray(gamma, dtype=float))
        P = np.polynomial.Polynomial(self.poly)
        E = self.amplitude * np.exp(self.k * beta + self.r * gamma)
        return E, P(gamma), P.deriv(1)(gamma), P.deriv(2)(gamma)

    def partials(self, beta, gamma) -> dict:
        """Value and partials up to second order, keyed ``"", "b", "g", "bb", "bg", "gg"``."""
        E, p0, p1, p2 = self._parts(beta, gamma)
        k, r = self.k, self.r
        dg = E * (r * p0 + p1)
        return {
            "": E * p0,
            "b": k * E * p0,
            "g": dg,
            "bb": k * k * E * p0,
            "bg": k * dg,
            "gg": E * (r * r * p0 + 2 * r * p1 + p2),
        }


@dataclass(frozen=True)
class SumWL:
    """Linear combination of ``ExpPolyWL`` terms (empty sum is ``W_L = 0``)."""

    terms: tuple = ()

    def partials(self, beta, gamma) -> dict:
        beta, gamma = np.broadcast_arrays(np.asarray(beta, dtype=float), np.asarray(gamma, dtype=float))
        out = {key: np.zeros(beta.shape) for key in ("", "b", "g", "bb", "bg", "gg")}
        for t in self.terms:
            for key, v in t.partials(beta, gamma).items():
                out[key] = out[key] + v
        return out

    def __add__(self, other):
        other_terms = other.terms if isinstance(other, SumWL) else (other,)
        return SumWL(self.terms + tuple(other_terms))

    def scaled(self, c: float) -> "SumWL":
        return SumWL(tuple(ExpPolyWL(c * t.amplitude, t.k, t.r, t.poly) for t in self.terms))


def _as_sum(WL) -> SumWL:
    if WL is None:
        return SumWL()
    if isinstance(WL, SumWL):
        return WL
    if isinstance(WL, ExpPolyWL):
        return SumWL((WL,))
    return SumWL(tuple(WL))


def _coeff(c, beta, gamma):
    return c(beta, gamma) if callable(c) else c


@dataclass(frozen=True)
class GeneratingFunction:
    """``W = s * y * exp(gamma^2/2 + beta) + W_L(beta, gamma)``."""

    WL: SumWL = field(default_factory=SumWL)
    s: float = -1.0
    coeffs: tuple = PRINTED_COEFFS

    def __post_init__(self):
        object.__setattr__(self, "WL", _as_sum(self.WL))
        if self.s not in (1, -1, 1.0, -1.0):
            raise ValueError("s must be +1 or -1")
        if len(self.coeffs) != 3 or all((not callable(c)) and c == 0 for c in self.coeffs):
            raise ValueError("coefficient triple must have three entries, not all zero")

    def partials(self, beta, gamma, y) -> dict:
        """Partials of the full ``W`` in ``(beta, gamma)`` at fixed ``y``."""
        beta, gamma, y = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (beta, gamma, y)))
        P = self.s * y * np.exp(0.5 * gamma * gamma + beta)
        L = self.WL.partials(beta, gamma)
        return {
            "": P + L[""],
            "b": P + L["b"],
            "g": gamma * P + L["g"],
            "bb": P + L["bb"],
            "bg": gamma * P + L["bg"],
            "gg": (1 + gamma * gamma) * P + L["gg"],
        }


def linear_pde_residual(gf: GeneratingFunction, beta, gamma, y=None):
    """Coefficient triple applied to ``W_L`` (or to the full ``W`` when ``y`` is given)."""
    d = gf.WL.partials(beta, gamma) if y is None else gf.partials(beta, gamma, y)
    cbg, cgg, cbb = (_coeff(c, beta, gamma) for c in gf.coeffs)
    return cbg * d["bg"] + cgg * d["gg"] + cbb * d["bb"]


def separable_WL(k: float, root_choice: str = "plus", coeffs=PRINTED_COEFFS, amplitude: float = 1.0) -> ExpPolyWL:
    """Exponential mode ``e^{k beta + r gamma}`` for a constant coefficient triple.

    ``r`` is a root of ``c_gg r^2 + c_bg k r + c_bb k^2 = 0``; for the
    default triple the roots are ``k (1 +- sqrt 2)``.  With ``k = 0`` the
    mode equation is ``V'' = 0``: ``plus`` returns ``gamma`` and ``minus``
    the constant 1.
    """
    if any(callable(c) for c in coeffs):
        raise ValueError("separable exponential modes need constant coefficients")
    if root_choice not in ("plus", "minus"):
        raise ValueError("root_choice must be 'plus' or 'minus'")
    cbg, cgg, cbb = (float(c) for c in coeffs)
    if k == 0:
        return ExpPolyWL(amplitude, 0.0, 0.0, (0.0, 1.0) if root_choice == "plus" else (1.0,))
    if cgg == 0:
        if cbg == 0:
            raise ValueError("no separable mode: only the beta-beta coefficient is non-zero")
        return ExpPolyWL(amplitude, k, -cbb * k / cbg)
    disc = (cbg * k) ** 2 - 4 * cgg * cbb * k * k
    if disc < 0:
        raise ValueError("characteristic roots are complex")
    sign = 1.0 if root_choice == "plus" else -1.0
    return ExpPolyWL(amplitude, k, (-cbg * k + sign * math.copysign(1.0, k) * math.sqrt(disc)) / (2 * cgg))


def polynomial_WL(n: int, amplitude: float = 1.0) -> ExpPolyWL:
    """``e^{-n beta} P_n(gamma)`` solving the variable-coefficient reading.

    ``P_n`` is monic of degree ``n`` with the parity of ``n``; its lower
    coefficients follow ``a_j = (j+2)(j+1) a_{j+2} / (n (n - j))``.
    """
    n = int(n)
    if n < 1:
        raise ValueError("n must be >= 1")
    a = [0.0] * (n + 1)
    a[n] = 1.0
    for j in range(n - 2, -1, -2):
        a[j] = (j + 2) * (j + 1) * a[j + 2] / (n * (n - j))
    return ExpPolyWL(amplitude, -float(n), 0.0, tuple(a))


def printed_example_gf() -> GeneratingFunction:
    """``W_L = 2 e^{-beta}`` with ``s = -1`` and the default coefficient reading."""
    return GeneratingFunction(SumWL((ExpPolyWL(2.0, -1.0),)), s=-1.0, coeffs=PRINTED_COEFFS)


@dataclass(frozen=True)
class FirstTermState:
    beta: float
    gamma: float

    def __post_init__(self):
        if not (math.isfinite(self.beta) and math.isfinite(self.gamma)):
            raise NonFinite("state must be finite")

    @property
    def u(self) -> float:
        return math.exp(0.5 * self.gamma**2 + self.beta)


def closed_form_state(x, y, z):
    """``(beta, gamma)`` of the ``W_L = 0, s = -1`` solution; NaN where ``x / y >= 0``."""
    x, y, z = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (x, y, z)))
    with np.errstate(all="ignore"):
        gamma = z / x
        ratio = -x / y
        beta = np.where(ratio > 0, np.log(np.where(ratio > 0, ratio, 1.0)) - 0.5 * gamma * gamma, np.nan)
    return beta, np.where(np.isfinite(beta), gamma, np.nan)


def _G(gf):
    def G(V, x, y, z):
        d = gf.partials(V[:, 0], V[:, 1], y)
        return np.stack([d["b"] - x, d["g"] - z], -1)

    def J(V, x, y, z):
        d = gf.partials(V[:, 0], V[:, 1], y)
        return np.stack([np.stack([d["bb"], d["bg"]], -1), np.stack([d["bg"], d["gg"]], -1)], -2)

    return G, J


def firstterm_states(gf: GeneratingFunction, x, y, z, seed=None, tol: float = 1e-12, max_iter: int = 60):
    """Vectorised inversion of ``x = W_beta, z = W_gamma``; returns ``(beta, gamma, status)``.

    ``seed(x, y, z) -> (beta, gamma)`` defaults to the ``W_L = 0`` closed
    form, which only needs ``x / y < 0``.  Points without a finite seed
    fall back to ``(0, 0)``.
    """
    x, y, z = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (x, y, z)))
    shape = x.shape
    sb, sg = (seed or closed_form_state)(x, y, z)
    sb = np.where(np.isfinite(sb), sb, 0.0)
    sg = np.where(np.isfinite(sg), sg, 0.0)
    G, J = _G(gf)
    guess = np.stack([np.ravel(sb), np.ravel(sg)], -1)
    res = newton_batch(G, guess, J, tol=tol, max_iter=max_iter, args=(x.ravel(), y.ravel(), z.ravel()))
    b, g = res.x[:, 0].copy(), res.x[:, 1].copy()
    b[~res.ok] = np.nan
    g[~res.ok] = np.nan
    return b.reshape(shape), g.reshape(shape), res.status.reshape(shape)


def firstterm_solve(gf: GeneratingFunction, p: Point3, guess, tol: float = 1e-12) -> FirstTermState:
    """Solve ``x = W_beta, z = W_gamma`` at one point from ``guess = (beta, gamma)``."""
    b0, g0 = (float(v) for v in guess)
    b, g, st = firstterm_states(gf, p.x, p.y, p.z, seed=lambda *_: (np.array(b0), np.array(g0)), tol=tol)
    st = int(st)
    if st == SINGULAR:
        raise SingularJacobian("Hessian of W is singular")
    if st == NONFINITE:
        raise NonFinite("generating function not finite")
    if st != OK:
        raise NoConvergence("first-term inversion did not converge")
    return FirstTermState(float(b), float(g))


@dataclass
class FirstTermFields:
    """``u``, ``beta``, ``gamma`` and ``T = u gamma`` as fields."""

    u: ScalarField3
    beta: ScalarField3
    gamma: ScalarField3
    T: ScalarField3


def firstterm_fields(gf: GeneratingFunction, seed=None, tol: float = 1e-13) -> FirstTermFields:
    def solve(x, y, z):
        b, g, _ = firstterm_states(gf, x, y, z, seed, tol)
        return b, g

    def u(x, y, z):
        b, g = solve(x, y, z)
        return np.exp(0.5 * g * g + b)

    def T(x, y, z):
        b, g = solve(x, y, z)
        return np.exp(0.5 * g * g + b) * g

    tag = "firstterm"
    return FirstTermFields(
        ScalarField3(u, name=f"{tag}.u", implicit_domain=True),
        ScalarField3(lambda x, y, z: solve(x, y, z)[0], name=f"{tag}.beta", implicit_domain=True),
        ScalarField3(lambda x, y, z: solve(x, y, z)[1], name=f"{tag}.gamma", implicit_domain=True),
        ScalarField3(T, name=f"{tag}.T", implicit_domain=True),
    )


def firstterm_field(gf: GeneratingFunction, seed=None, tol: float = 1e-13) -> ScalarField3:
    """``u = exp(gamma^2/2 + beta)`` at the solved state."""
    return firstterm_fields(gf, seed, tol).u


def firstterm_verify(
    gf: GeneratingFunction,
    grid: Grid3,
    cfg: StencilConfig = StencilConfig(),
    seed=None,
    gamma_shift: float = 0.0,
    threads: int = 1,
) -> list[ResidualReport]:
    """Toda, T-system (``T = u gamma``), constraint, symmetry and cross-derivative reports.

    ``T`` itself obeys ``(T_x / u)_y = T_zz`` (kind ``tsymmetry``), so the
    symmetry equation is checked for ``S = T_x``.  ``gamma_shift`` perturbs
    ``gamma`` inside the constraint check only (negative control).
    """
    F = firstterm_fields(gf, seed)

    def constraint(x, y, z):
        b, g, _ = firstterm_states(gf, x, y, z, seed, 1e-13)
        u = np.exp(0.5 * g * g + b)
        gs = g + gamma_shift
        return np.log(u) - (0.5 * gs * gs + b)

    def tsymmetry(x, y, z):
        Tx = derivative_field(F.T, "x", cfg).values
        return d1(lambda a, b, c: Tx(a, b, c) / F.u.values(a, b, c), x, y, z, "y", cfg) - d2(F.T.values, x, y, z, "z", cfg)

    def cross(x, y, z):
        return d1(F.beta.values, x, y, z, "z", cfg) - d1(F.gamma.values, x, y, z, "x", cfg)

    checks = [
        ("toda", pointwise("toda", F.u, cfg=cfg)),
        ("system2.r1", pointwise("system2.r1", F.u, F.T, cfg=cfg)),
        ("system2.r2", pointwise("system2.r2", F.u, F.T, cfg=cfg)),
        ("constraint", constraint),
        ("tsymmetry", tsymmetry),
        ("symmetry", pointwise("symmetry", F.u, derivative_field(F.T, "x", cfg), cfg=cfg)),
        ("cross", cross),
    ]
    name = f"firstterm[s={gf.s:+g},terms={len(gf.WL.terms)}]"
    return run_checks(checks, grid, cfg, name, threads)
