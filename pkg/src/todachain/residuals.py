"""Residual operators for the continuous Toda chain and its companions.

Every residual is written LHS - RHS in the orientation of the governing
equation:

* Toda:            (ln u)_xy - u_zz
* system (T):      (ln u)_y - T_z,   u_z - T_x
* system (w):      (ln u)_x - w_z,   u_z - w_y
* symmetry:        (S/u)_xy - S_zz
* potential form:  theta_yx - theta_x * theta_zz
* discrete chain:  rho_xy - (e^{rho_{n+1}} - 2 e^{rho_n} + e^{rho_{n-1}})

Each operator has a private vectorised kernel ``_name(..., x, y, z, cfg,
strict)``.  With ``strict=False`` stencil failures become NaN, which
:func:`residual_report` counts as skipped points.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import partial
from typing import Callable

import numpy as np

from .errors import AllPointsSkipped, NonFinite, ZeroResidual
from .numcore import (
    Grid3,
    Point3,
    ScalarField3,
    StencilConfig,
    d1,
    d2,
    d11,
    evaluator,
    positive,
)

__all__ = [
    "ResidualReport",
    "SymmetryPair",
    "toda_residual",
    "system2_residuals",
    "system3_residuals",
    "symmetry_residual",
    "theta_residual",
    "discrete_chain_residual",
    "convergence_order",
    "residual_report",
    "pointwise",
    "derivative_field",
]


@dataclass
class ResidualReport:
    family_name: str
    kind: str
    grid: Grid3
    stencil: StencilConfig
    max_abs: float
    rms: float
    n_points: int
    n_skipped: int
    worst_point: tuple[float, float, float]
    wall_ms: int = 0

    def passed(self, tol: float) -> bool:
        return self.max_abs <= tol

    def to_dict(self, timing: bool = True) -> dict:
        return {
            "kind": self.kind,
            "max_abs": self.max_abs,
            "rms": self.rms,
            "n_points": self.n_points,
            "n_skipped": self.n_skipped,
            "worst_point": list(self.worst_point),
            "wall_ms": self.wall_ms if timing else 0,
        }


@dataclass
class SymmetryPair:
    """A solution ``u`` and a candidate ``S`` of its linearisation."""

    u: ScalarField3
    S: ScalarField3


def _pt(p: Point3):
    return p.x, p.y, p.z


def _log(ev_u, strict):
    pos = positive(ev_u, strict)
    return lambda x, y, z: np.log(pos(x, y, z))


# --- kernels --------------------------------------------------------------


def _toda(u, x, y, z, cfg, strict=False):
    ev = evaluator(u, strict)
    pos = positive(ev, strict)
    return d11(_log(ev, strict), x, y, z, ("x", "y"), cfg) - d2(pos, x, y, z, "z", cfg)


def _system2(u, T, x, y, z, cfg, strict=False):
    ev = positive(evaluator(u, strict), strict)
    evT = evaluator(T, strict)
    r1 = d1(_log(ev, strict), x, y, z, "y", cfg) - d1(evT, x, y, z, "z", cfg)
    r2 = d1(ev, x, y, z, "z", cfg) - d1(evT, x, y, z, "x", cfg)
    return r1, r2


def _system3(u, w, x, y, z, cfg, strict=False):
    ev = positive(evaluator(u, strict), strict)
    evw = evaluator(w, strict)
    r1 = d1(_log(ev, strict), x, y, z, "x", cfg) - d1(evw, x, y, z, "z", cfg)
    r2 = d1(ev, x, y, z, "z", cfg) - d1(evw, x, y, z, "y", cfg)
    return r1, r2


def _symmetry(u, S, x, y, z, cfg, strict=False):
    ev_u = positive(evaluator(u, strict), strict)
    ev_s = evaluator(S, strict)

    def ratio(a, b, c):
        return ev_s(a, b, c) / ev_u(a, b, c)

    return d11(ratio, x, y, z, ("x", "y"), cfg) - d2(ev_s, x, y, z, "z", cfg)


def _theta(theta, x, y, z, cfg, strict=False):
    ev = evaluator(theta, strict)
    return d11(ev, x, y, z, ("x", "y"), cfg) - d1(ev, x, y, z, "x", cfg) * d2(ev, x, y, z, "z", cfg)


def _discrete(rho, eps, x, y, z, cfg, strict=False):
    ev = evaluator(rho, strict)
    shift = -2.0 * math.log(eps)

    def rho_n(k):
        return ev(x, y, z + k * eps) + shift

    lattice = np.exp(rho_n(1)) - 2.0 * np.exp(rho_n(0)) + np.exp(rho_n(-1))
    return d11(ev, x, y, z, ("x", "y"), cfg) - lattice


def _check(value):
    if not np.all(np.isfinite(value)):
        raise NonFinite("residual is not finite")
    return float(value)


# --- pointwise API --------------------------------------------------------


def toda_residual(u, p: Point3, cfg: StencilConfig = StencilConfig()) -> float:
    """(ln u)_xy - u_zz at ``p``; raises ``NonPositiveField`` if u <= 0 on the stencil."""
    return _check(_toda(u, *_pt(p), cfg, strict=True))


def system2_residuals(u, T, p: Point3, cfg: StencilConfig = StencilConfig()) -> tuple[float, float]:
    """((ln u)_y - T_z, u_z - T_x) at ``p``."""
    r1, r2 = _system2(u, T, *_pt(p), cfg, strict=True)
    return _check(r1), _check(r2)


def system3_residuals(u, w, p: Point3, cfg: StencilConfig = StencilConfig()) -> tuple[float, float]:
    """((ln u)_x - w_z, u_z - w_y) at ``p``: the x<->y mirror of the T system."""
    r1, r2 = _system3(u, w, *_pt(p), cfg, strict=True)
    return _check(r1), _check(r2)


def symmetry_residual(pair: SymmetryPair, p: Point3, cfg: StencilConfig = StencilConfig()) -> float:
    """(S/u)_xy - S_zz at ``p``."""
    return _check(_symmetry(pair.u, pair.S, *_pt(p), cfg, strict=True))


def theta_residual(theta, p: Point3, cfg: StencilConfig = StencilConfig()) -> float:
    """theta_yx - theta_x * theta_zz at ``p``."""
    return _check(_theta(theta, *_pt(p), cfg, strict=True))


def discrete_chain_residual(rho, p: Point3, eps: float, cfg: StencilConfig = StencilConfig()) -> float:
    """Residual of the discrete chain with lattice spacing ``eps`` in z.

    Chain sites are ``rho_n(x, y) = rho(x, y, z + n*eps) - 2 ln eps``, so for
    a continuum solution the result is ``O(eps**2)``.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    return _check(_discrete(rho, eps, *_pt(p), cfg, strict=True))


def convergence_order(residual_fn: Callable[[Point3, float], float], p: Point3, h_sequence, floor: float = 1e-10) -> float:
    """Observed order ``log2(|r(h2)| / |r(h3)|)`` from three halving steps.

    ``residual_fn(p, h)`` must tend to zero with ``h``.  Raises
    ``ZeroResidual`` when the two finest residuals are both below ``floor``.
    """
    hs = [float(h) for h in h_sequence]
    if len(hs) != 3:
        raise ValueError("need exactly three step sizes")
    for a, b in zip(hs, hs[1:]):
        if not (b < a and abs(a / b - 2.0) < 1e-9):
            raise ValueError("steps must halve")
    r = [abs(residual_fn(p, h)) for h in hs]
    if not all(math.isfinite(v) for v in r):
        raise NonFinite("non-finite residual in convergence study")
    if (r[1] < floor and r[2] < floor) or min(r[1], r[2]) == 0.0:
        raise ZeroResidual("residual below noise floor: exact to round-off")
    return math.log2(r[1] / r[2])


# --- grid reports ---------------------------------------------------------

def pointwise(kind: str, *fields, cfg: StencilConfig, **kw) -> Callable:
    """Vectorised, NaN-skipping residual ``fn(x, y, z)`` for a kernel name."""
    kernels = {
        "toda": _toda,
        "theta": _theta,
        "symmetry": _symmetry,
        "discrete": _discrete,
    }
    if kind in ("system2.r1", "system2.r2", "system3.r1", "system3.r2"):
        base, comp = kind.split(".")
        fn = _system2 if base == "system2" else _system3
        i = 0 if comp == "r1" else 1
        return lambda x, y, z: fn(*fields, x, y, z, cfg, strict=False)[i]
    try:
        fn = kernels[kind]
    except KeyError:
        raise ValueError(f"unknown residual kind {kind!r}") from None
    if kind == "discrete":
        return lambda x, y, z: fn(*fields, kw["eps"], x, y, z, cfg, strict=False)
    return lambda x, y, z: fn(*fields, x, y, z, cfg, strict=False)


def derivative_field(u, axis, cfg: StencilConfig = StencilConfig(h=1e-3)) -> ScalarField3:
    """The field ``du/d(axis)`` by central differences (NaN off-domain)."""
    f = u if isinstance(u, ScalarField3) else ScalarField3(u)
    ev = f.values
    return ScalarField3(lambda x, y, z: d1(ev, x, y, z, axis, cfg), f.domain, name=f"{f.name}_{axis}")


def _chunks(n: int, k: int):
    k = max(1, min(k, n))
    edges = np.linspace(0, n, k + 1).astype(int)
    return [(edges[i], edges[i + 1]) for i in range(k)]


def evaluate_on_grid(fn: Callable, grid: Grid3, threads: int = 1) -> tuple[np.ndarray, tuple]:
    """Evaluate a vectorised ``fn(x, y, z)`` on all grid points (C order)."""
    X, Y, Z = (a.ravel() for a in grid.mesh())
    if threads <= 1:
        with np.errstate(all="ignore"):
            vals = np.asarray(fn(X, Y, Z), dtype=float)
    else:

        def run(span):
            a, b = span
            with np.errstate(all="ignore"):
                return np.asarray(fn(X[a:b], Y[a:b], Z[a:b]), dtype=float)

        with ThreadPoolExecutor(max_workers=threads) as pool:
            vals = np.concatenate(list(pool.map(run, _chunks(X.size, threads))))
    vals = np.broadcast_to(vals, X.shape).copy()
    vals[~np.isfinite(vals)] = np.nan
    return vals, (X, Y, Z)


def report_from_values(values, points, grid, cfg, family_name, kind, wall_ms=0) -> ResidualReport:
    kept = np.isfinite(values)
    n_points = int(kept.sum())
    if n_points == 0:
        raise AllPointsSkipped(f"{family_name}/{kind}: every grid point was skipped")
    a = np.abs(values[kept])
    j = int(np.argmax(a))
    idx = np.nonzero(kept)[0][j]
    worst = tuple(float(c[idx]) for c in points)
    rms = float(np.sqrt(np.mean(a * a)))
    max_abs = float(a[j])
    return ResidualReport(
        family_name=family_name,
        kind=kind,
        grid=grid,
        stencil=cfg,
        max_abs=max_abs,
        rms=min(rms, max_abs),
        n_points=n_points,
        n_skipped=int(values.size - n_points),
        worst_point=worst,
        wall_ms=int(wall_ms),
    )


def residual_report(
    u,
    grid: Grid3,
    cfg: StencilConfig = StencilConfig(),
    residual_kind="toda",
    family_name: str = "custom",
    threads: int = 1,
) -> ResidualReport:
    """Aggregate a pointwise residual over a grid.

    ``residual_kind`` is ``"toda"``, ``"theta"`` or a vectorised callable
    ``fn(x, y, z)`` returning NaN at skipped points (``u`` is then unused).
    Points whose stencil leaves the domain are counted in ``n_skipped``.
    """
    t0 = time.perf_counter()
    if callable(residual_kind):
        fn, kind = residual_kind, getattr(residual_kind, "__name__", "custom")
    else:
        fn, kind = pointwise(residual_kind, u, cfg=cfg), residual_kind
    values, points = evaluate_on_grid(fn, grid, threads)
    wall = (time.perf_counter() - t0) * 1e3
    return report_from_values(values, points, grid, cfg, family_name, kind, wall)


def run_checks(checks, grid: Grid3, cfg: StencilConfig, family_name: str, threads: int = 1) -> list[ResidualReport]:
    """Evaluate ``[(kind, fn), ...]`` on ``grid`` into timed reports."""
    reports = []
    for kind, fn in checks:
        t0 = time.perf_counter()
        vals, pts = evaluate_on_grid(fn, grid, threads)
        wall = (time.perf_counter() - t0) * 1e3
        reports.append(report_from_values(vals, pts, grid, cfg, family_name, kind, wall))
    return reports


def named(fn: Callable, name: str) -> Callable:
    """Attach a report kind name to a residual callable."""
    wrapped = partial(fn)
    wrapped.__name__ = name
    return wrapped
