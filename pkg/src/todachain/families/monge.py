"""Zero-order family: implicit solutions of the Monge transport equation.

With ``T = u`` the first-order system reduces to a pair of transport
equations.  Variant A,

    x + z + u*y = F(u),

satisfies ``u_y = u u_z`` and ``u_z = u_x``; variant B (x and y exchanged),

    y + z + u*x = F(u),

satisfies ``u_x = u u_z`` and ``u_z = u_y``.  Both solve the Toda equation
for any profile ``F``.  The root is found pointwise; where
``d/du (lhs - F) = y - F'(u)`` (A) vanishes the solution has a caustic.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..errors import CausticSingular, NoBracket, NoConvergence, NonFinite
from ..numcore import (
    OK,
    Grid3,
    Point3,
    ScalarField3,
    StencilConfig,
    d1,
    root_bracket_array,
)
from ..residuals import ResidualReport, run_checks, pointwise

__all__ = [
    "MongeProfile",
    "MongeVariant",
    "BracketPolicy",
    "ContinuationPolicy",
    "linear_profile",
    "square_profile",
    "exp_profile",
    "monge_solve",
    "monge_field",
    "monge_verify",
    "transport_residuals",
]

CAUSTIC_TOL = 1e-10


class MongeVariant(enum.Enum):
    A = "A"
    B = "B"


@dataclass(frozen=True)
class MongeProfile:
    """Free function ``F(u)`` with its derivative."""

    F: Callable
    dF: Callable
    description: str = ""

    def check_derivative(self, samples, tol: float = 1e-6) -> float:
        """Max deviation between ``dF`` and a central difference of ``F``."""
        u = np.asarray(samples, dtype=float)
        h = 1e-5 * np.maximum(1.0, np.abs(u))
        fd = (self.F(u + h) - self.F(u - h)) / (2 * h)
        err = float(np.max(np.abs(fd - self.dF(u))))
        if not err < tol:
            raise ValueError(f"dF inconsistent with F (max deviation {err:.3g})")
        return err


def linear_profile(c0: float = 0.0, c1: float = 1.0) -> MongeProfile:
    return MongeProfile(
        lambda u: c0 + c1 * np.asarray(u, dtype=float),
        lambda u: c1 + 0.0 * np.asarray(u, dtype=float),
        f"{c0} + {c1}*u",
    )


def square_profile() -> MongeProfile:
    return MongeProfile(lambda u: np.asarray(u, dtype=float) ** 2, lambda u: 2 * np.asarray(u, dtype=float), "u^2")


def exp_profile() -> MongeProfile:
    return MongeProfile(np.exp, np.exp, "exp(u)")


PROFILES = {"linear": linear_profile, "square": square_profile, "exp": exp_profile}


def _lhs(variant: MongeVariant, x, y, z, u):
    if variant is MongeVariant.A:
        return x + z + u * y
    return y + z + u * x


def _lhs_du(variant: MongeVariant, x, y, z):
    return y if variant is MongeVariant.A else x


@dataclass(frozen=True)
class BracketPolicy:
    """Constant bracket ``[lo, hi]`` for every point."""

    lo: float
    hi: float


@dataclass(frozen=True)
class ContinuationPolicy:
    """Newton from a seed that follows the previous point of a line sweep.

    Only meaningful for single-threaded sweeps; ``seed`` starts the first
    point.
    """

    seed: float


def _newton_scalar(g, dg, u, tol, max_iter):
    for _ in range(max_iter):
        gu = g(u)
        if not math.isfinite(gu):
            raise NonFinite("implicit function not finite")
        s = dg(u)
        if abs(s) < CAUSTIC_TOL:
            raise CausticSingular(f"d/du of the implicit equation vanishes at u={u}")
        if abs(gu) <= tol:
            return u
        step, t = gu / s, 1.0
        while t > 2.0**-20:
            un = u - t * step
            gn = g(un)
            if math.isfinite(gn) and abs(gn) < abs(gu):
                break
            t *= 0.5
        u = un
    raise NoConvergence("Monge Newton iteration cap reached")


def monge_solve(profile: MongeProfile, variant, p: Point3, branch, tol: float = 1e-12) -> float:
    """Solve the implicit Monge equation for ``u`` at ``p``.

    ``branch`` is a ``(lo, hi)`` bracket or a float Newton guess.  Raises
    ``CausticSingular`` when ``|d/du (lhs - F)| < 1e-10`` at the root or on
    the Newton path.
    """
    variant = MongeVariant(variant)
    x, y, z = p.as_tuple()
    a = _lhs_du(variant, x, y, z)

    def g(u):
        return float(_lhs(variant, x, y, z, u) - profile.F(u))

    def dg(u):
        return float(a - profile.dF(u))

    if isinstance(branch, (tuple, list, BracketPolicy)):
        lo, hi = (branch.lo, branch.hi) if isinstance(branch, BracketPolicy) else branch
        glo, ghi = g(lo), g(hi)
        if not (math.isfinite(glo) and math.isfinite(ghi)):
            raise NonFinite("implicit function not finite on the bracket")
        if glo * ghi > 0:
            if abs(dg(0.5 * (lo + hi))) < CAUSTIC_TOL and abs(dg(lo)) < CAUSTIC_TOL:
                raise CausticSingular("implicit equation is degenerate on the bracket")
            raise NoBracket(f"no sign change on [{lo}, {hi}]")
        u, status, _ = root_bracket_array(g, lo, hi, dg=dg, tol=tol)
        if int(status) != OK:
            raise NoConvergence("bracketed Monge solve failed")
        u = float(u)
    else:
        seed = branch.seed if isinstance(branch, ContinuationPolicy) else float(branch)
        u = _newton_scalar(g, dg, seed, tol, 100)
    if abs(dg(u)) < CAUSTIC_TOL:
        raise CausticSingular(f"caustic at u={u}")
    return u


class _MongeEval:
    """Vectorised bracketed evaluation; tracks Newton iteration counts."""

    def __init__(self, profile, variant, lo, hi, tol, margin):
        self.profile, self.variant = profile, variant
        self.lo, self.hi, self.tol, self.margin = lo, hi, tol, margin
        self.calls = 0
        self.iterations = 0

    def __call__(self, x, y, z):
        x, y, z = np.broadcast_arrays(x, y, z)
        prof, var = self.profile, self.variant
        a = _lhs_du(var, x, y, z)
        lhs0 = _lhs(var, x, y, z, 0.0)

        def g(u):
            return lhs0 + a * u - prof.F(u)

        def dg(u):
            return a - prof.dF(u)

        u, status, iters = root_bracket_array(g, self.lo, self.hi, dg=dg, tol=self.tol)
        u = np.broadcast_to(u, x.shape).copy()
        self.calls += int(np.size(u))
        self.iterations += int(np.sum(iters))
        with np.errstate(all="ignore"):
            bad = (status != OK) | ~(np.abs(dg(u)) >= self.margin)
        u[np.broadcast_to(bad, u.shape)] = np.nan
        return u

    @property
    def mean_iterations(self) -> float:
        return self.iterations / max(self.calls, 1)


def monge_field(profile: MongeProfile, variant="A", branch_policy=BracketPolicy(1e-6, 1e3), tol: float = 1e-13, caustic_margin: float = 1e-3) -> ScalarField3:
    """ScalarField3 evaluating ``monge_solve`` pointwise.

    Points where the bracket fails or ``|y - F'(u)| < caustic_margin`` (the
    caustic neighbourhood) are outside the domain.  The returned field's
    ``func`` exposes ``mean_iterations`` for solver statistics.
    """
    variant = MongeVariant(variant)
    if isinstance(branch_policy, (tuple, list)):
        branch_policy = BracketPolicy(*branch_policy)
    if isinstance(branch_policy, ContinuationPolicy):
        return _continuation_field(profile, variant, branch_policy, tol, caustic_margin)
    ev = _MongeEval(profile, variant, branch_policy.lo, branch_policy.hi, tol, caustic_margin)
    return ScalarField3(ev, name=f"monge[{profile.description},{variant.value}]", implicit_domain=True)


def _continuation_field(profile, variant, policy, tol, margin):
    state = {"seed": policy.seed}

    def func(x, y, z):
        x, y, z = np.broadcast_arrays(x, y, z)
        out = np.empty(x.shape)
        for i, p in enumerate(zip(x.ravel(), y.ravel(), z.ravel())):
            try:
                u = monge_solve(profile, variant, Point3(*p), state["seed"], tol)
                if abs(_lhs_du(variant, *p) - profile.dF(u)) < margin:
                    raise CausticSingular("caustic neighbourhood")
                state["seed"] = u
            except (NoConvergence, CausticSingular, NonFinite):
                u = np.nan
            out.flat[i] = u
        return out

    return ScalarField3(func, name=f"monge-continuation[{profile.description}]", implicit_domain=True)


def transport_residuals(u, variant, x, y, z, cfg: StencilConfig):
    """The two transport residuals of a variant (vectorised, NaN-skipping)."""
    variant = MongeVariant(variant)
    ev = u.values if isinstance(u, ScalarField3) else u
    ux, uy, uz = (d1(ev, x, y, z, ax, cfg) for ax in "xyz")
    uc = ev(x, y, z)
    if variant is MongeVariant.A:
        return uy - uc * uz, uz - ux
    return ux - uc * uz, uz - uy


def monge_verify(profile: MongeProfile, variant, grid: Grid3, cfg: StencilConfig = StencilConfig(), branch_policy=BracketPolicy(1e-6, 1e3), field: ScalarField3 | None = None, threads: int = 1) -> list[ResidualReport]:
    """Toda, transport and first-order-system reports for a Monge field.

    Variant A is checked against the T-system with ``T = u``; variant B
    against the mirrored w-system with ``w = u``.
    """
    variant = MongeVariant(variant)
    u = field if field is not None else monge_field(profile, variant, branch_policy)
    name = f"monge[{profile.description},{variant.value}]"
    sysname = "system2" if variant is MongeVariant.A else "system3"
    checks = [
        ("toda", pointwise("toda", u, cfg=cfg)),
        ("transport.r1", lambda x, y, z: transport_residuals(u, variant, x, y, z, cfg)[0]),
        ("transport.r2", lambda x, y, z: transport_residuals(u, variant, x, y, z, cfg)[1]),
        (f"{sysname}.r1", pointwise(f"{sysname}.r1", u, u, cfg=cfg)),
        (f"{sysname}.r2", pointwise(f"{sysname}.r2", u, u, cfg=cfg)),
    ]
    return run_checks(checks, grid, cfg, name, threads)
