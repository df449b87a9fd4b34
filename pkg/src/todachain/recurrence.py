"""Truncated series solutions of the symmetry equation via the alpha chain.

Starting from ``alpha_n = 1`` the chain descends by

    alpha_{m-1} = int dy (u^{m+1} alpha_m)_z / ((m + 1) u^m),

and is admissible at level ``m`` when

    (u^{m+1} alpha_m)_x / u^{m+1} = (m + 1) (alpha_{m-1})_z.

Cross-differentiating the two relations gives

    ((u^{m+1} alpha_m)_z / u^m)_z = ((u^{m+1} alpha_m)_x / u^{m+1})_y,

which ``alpha = 1`` satisfies exactly when ``u`` solves the Toda equation.
The bottom of the chain gives ``T = u alpha_0``.

Chains live on a ``Grid3``.  The integration constant of every ``dy``
integral is a function of ``(x, z)``; by default it is 0 on the plane
``y = y0``, and ``base`` may prescribe it instead.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainViolation, NonPositiveField, TooFewSamples
from .numcore import Grid3, StencilConfig, cumulative_integral_y, d1, evaluator, grid_d1
from .residuals import ResidualReport, report_from_values

__all__ = [
    "AlphaChain",
    "alpha_chain",
    "alpha_consistency",
    "chain_consistency",
    "alpha_pde_residual",
    "T_from_chain",
    "theta_relation_residual",
    "truncation_coherence",
    "CoherenceResult",
]


@dataclass
class AlphaChain:
    """``alphas[0]`` is ``alpha_{n_top}`` (all ones); ``alphas[-1]`` is ``alpha_0``."""

    n_top: int
    alphas: list
    grid: Grid3
    y0: float
    u: np.ndarray = field(repr=False, default=None)

    def alpha(self, m: int) -> np.ndarray:
        if not 0 <= m <= self.n_top:
            raise IndexError(f"level {m} outside 0..{self.n_top}")
        return self.alphas[self.n_top - m]


def _gridded(u, grid: Grid3) -> np.ndarray:
    if isinstance(u, np.ndarray):
        if u.shape != tuple(grid.counts):
            raise ValueError(f"gridded u has shape {u.shape}, grid needs {tuple(grid.counts)}")
        return u.astype(float)
    X, Y, Z = grid.mesh()
    with np.errstate(all="ignore"):
        return np.asarray(evaluator(u, False)(X, Y, Z), dtype=float) * np.ones(X.shape)


def _y0_index(grid: Grid3, y0):
    ys = grid.axes()[1]
    if y0 is None:
        return 0, float(ys[0])
    j = int(np.argmin(np.abs(ys - y0)))
    if abs(ys[j] - y0) > 1e-9 * max(1.0, abs(y0)):
        raise ValueError(f"y0={y0} is not a grid node")
    return j, float(ys[j])


def alpha_chain(
    u,
    n_top: int,
    grid: Grid3,
    y0: float | None = None,
    base: dict | None = None,
    cfg: StencilConfig = StencilConfig(),
) -> AlphaChain:
    """Build ``alpha_{n_top} = 1, ..., alpha_0`` on ``grid``.

    ``u`` is a field (callable or ``ScalarField3``) or an array on the
    grid.  With a field, the top-level z-derivative ``(u^{n+1})_z`` is taken
    from the field with stencil ``cfg``; deeper levels difference gridded
    data (order 4, NaN margins).  ``base`` maps a level ``m`` to values of
    ``alpha_m`` on the plane ``y = y0`` (callable of ``(x, z)`` or array),
    replacing the zero integration constant.
    """
    n_top = int(n_top)
    if n_top < 0:
        raise ValueError("n_top must be >= 0")
    if grid.counts[1] < 2:
        raise TooFewSamples("alpha chain needs at least two y samples")
    if n_top > 0 and grid.counts[2] < 5:
        raise TooFewSamples("alpha chain needs at least five z samples")
    U = _gridded(u, grid)
    with np.errstate(invalid="ignore"):
        if np.any(U <= 0):
            raise NonPositiveField("u must be positive on the grid")
    j0, y0 = _y0_index(grid, y0)
    hy, hz = grid.spacing[1], grid.spacing[2]
    X, Y, Z = grid.mesh()
    base = base or {}
    alphas = [np.ones(U.shape)]
    for m in range(n_top, 0, -1):
        am = alphas[-1]
        if m == n_top and not isinstance(u, np.ndarray):
            ev = evaluator(u, False)
            with np.errstate(all="ignore"):
                dz = d1(lambda x, y, z: ev(x, y, z) ** (m + 1), X, Y, Z, "z", cfg)
        else:
            dz = grid_d1(U ** (m + 1) * am, hz, axis=2)
        integrand = dz / ((m + 1) * U**m)
        F = cumulative_integral_y(integrand, hy, axis=1)
        F = F - F[:, j0 : j0 + 1, :]
        if (m - 1) in base:
            b = base[m - 1]
            b = b(X[:, j0, :], Z[:, j0, :]) if callable(b) else np.asarray(b, dtype=float)
            F = F + np.asarray(b)[:, None, :]
        alphas.append(F)
    return AlphaChain(n_top, alphas, grid, y0, U)


def alpha_consistency(u, a_m, a_m1, m: int, x, y, z, cfg: StencilConfig = StencilConfig()):
    """Pointwise ``(u^{m+1} a_m)_x / u^{m+1} - (m+1) (a_{m-1})_z`` for field inputs."""
    eu, ea, eb = (evaluator(f, False) for f in (u, a_m, a_m1))

    def prod(a, b, c):
        return eu(a, b, c) ** (m + 1) * ea(a, b, c)

    with np.errstate(all="ignore"):
        return d1(prod, x, y, z, "x", cfg) / eu(x, y, z) ** (m + 1) - (m + 1) * d1(eb, x, y, z, "z", cfg)


def chain_consistency(chain: AlphaChain, m: int, u=None, cfg: StencilConfig = StencilConfig()) -> np.ndarray:
    """Gridded consistency residual at level ``m`` (NaN on stencil margins).

    With a field ``u`` and ``m = n_top`` the x-derivative uses the field;
    otherwise both derivatives difference gridded data.
    """
    if not 1 <= m <= chain.n_top:
        raise ValueError(f"level m={m} outside 1..{chain.n_top}")
    U = chain.u
    hx, hz = chain.grid.spacing[0], chain.grid.spacing[2]
    if u is not None and m == chain.n_top:
        ev = evaluator(u, False)
        X, Y, Z = chain.grid.mesh()
        with np.errstate(all="ignore"):
            dx = d1(lambda a, b, c: ev(a, b, c) ** (m + 1), X, Y, Z, "x", cfg)
    else:
        dx = grid_d1(U ** (m + 1) * chain.alpha(m), hx, axis=0)
    return dx / U ** (m + 1) - (m + 1) * grid_d1(chain.alpha(m - 1), hz, axis=2)


def alpha_pde_residual(u, a_n, n: int, x, y, z, cfg: StencilConfig = StencilConfig(), form: str = "printed"):
    """Residual of the consolidated equation for ``alpha_n``.

    ``form="printed"``: ``(u^{n+2} a_z)_z - (u^{n+1} a_y)_x``.
    ``form="eliminated"``: ``((u^{n+1} a)_z / u^n)_z - ((u^{n+1} a)_x / u^{n+1})_y``,
    the direct cross-derivative of the two chain relations.
    """
    eu, ea = evaluator(u, False), evaluator(a_n, False)
    if form == "printed":

        def left(a, b, c):
            return eu(a, b, c) ** (n + 2) * d1(ea, a, b, c, "z", cfg)

        def right(a, b, c):
            return eu(a, b, c) ** (n + 1) * d1(ea, a, b, c, "y", cfg)

        with np.errstate(all="ignore"):
            return d1(left, x, y, z, "z", cfg) - d1(right, x, y, z, "x", cfg)
    if form == "eliminated":

        def prod(a, b, c):
            return eu(a, b, c) ** (n + 1) * ea(a, b, c)

        def left(a, b, c):
            return d1(prod, a, b, c, "z", cfg) / eu(a, b, c) ** n

        def right(a, b, c):
            return d1(prod, a, b, c, "x", cfg) / eu(a, b, c) ** (n + 1)

        with np.errstate(all="ignore"):
            return d1(left, x, y, z, "z", cfg) - d1(right, x, y, z, "y", cfg)
    raise ValueError(f"unknown form {form!r}")


def _grid_report(values, chain_grid, cfg, name, kind) -> ResidualReport:
    X, Y, Z = chain_grid.mesh()
    vals = np.asarray(values, dtype=float).ravel().copy()
    vals[~np.isfinite(vals)] = np.nan
    return report_from_values(vals, (X.ravel(), Y.ravel(), Z.ravel()), chain_grid, cfg, name, kind)


def T_from_chain(chain: AlphaChain, cfg: StencilConfig = StencilConfig()):
    """``T = u alpha_0`` on the grid plus gridded symmetry reports.

    ``symmetry`` checks ``S = T``: ``(T/u)_xy = T_zz``; ``tsymmetry`` checks
    ``(T_x/u)_y = T_zz``.  Both use order-4 grid differences, so their size
    reflects the grid spacing.
    """
    U, T = chain.u, chain.u * chain.alpha(0)
    hx, hy, hz = chain.grid.spacing

    def dzz(f):
        return grid_d1(grid_d1(f, hz, 2), hz, 2)

    sym = grid_d1(grid_d1(T / U, hx, 0), hy, 1) - dzz(T)
    tsym = grid_d1(grid_d1(T, hx, 0) / U, hy, 1) - dzz(T)
    name = f"recurrence[n_top={chain.n_top}]"
    reports = [
        _grid_report(sym, chain.grid, cfg, name, "symmetry"),
        _grid_report(tsym, chain.grid, cfg, name, "tsymmetry"),
    ]
    return T, reports


def theta_relation_residual(theta, u, a1, x, y, z, cfg: StencilConfig = StencilConfig()):
    """``theta_y - theta_z^2 / 2 - u^2 a1 / 2`` (caller ensures ``u = theta_x``)."""
    et, eu, ea = (evaluator(f, False) for f in (theta, u, a1))
    with np.errstate(all="ignore"):
        tz = d1(et, x, y, z, "z", cfg)
        return d1(et, x, y, z, "y", cfg) - 0.5 * tz * tz - 0.5 * eu(x, y, z) ** 2 * ea(x, y, z)


@dataclass
class CoherenceResult:
    """Level-``m`` consistency with a Richardson error budget."""

    max_abs: float
    budget: float
    passed: bool
    residual: np.ndarray = field(repr=False)


def _coarse(grid: Grid3) -> Grid3:
    if any(n % 2 == 0 or n < 9 for n in grid.counts):
        raise TooFewSamples("budget estimate needs odd counts >= 9 on every axis")
    return Grid3(grid.origin, tuple(2 * h for h in grid.spacing), tuple((n + 1) // 2 for n in grid.counts))


def truncation_coherence(u, grid: Grid3, n_top: int = 1, base: dict | None = None, safety: float = 4.0, floor: float = 1e-10, cfg: StencilConfig = StencilConfig()) -> CoherenceResult:
    """Check that ``u`` is compatible with truncation at ``n_top``.

    The residual is computed on ``grid`` and on its stride-2 coarsening; both
    discretisations are 4th order, so ``|r_h - r_2h| / 15`` estimates the
    discretisation error of ``r_h``.  Passes when
    ``max|r_h| <= safety * max(budget) + floor``.
    """
    if isinstance(u, np.ndarray):
        raise ValueError("truncation_coherence needs a field, not gridded data")
    fine = alpha_chain(u, n_top, grid, None, base, cfg)
    coarse = alpha_chain(u, n_top, _coarse(grid), None, base, cfg)
    rf = chain_consistency(fine, n_top, u, cfg)
    rc = chain_consistency(coarse, n_top, u, cfg)
    rf_sub = rf[::2, ::2, ::2]
    diff = np.abs(rf_sub - rc) / 15.0
    interior = np.isfinite(diff)
    if not np.any(interior):
        raise DomainViolation("no interior points for the budget estimate")
    budget = float(np.max(diff[interior]))
    mx = float(np.nanmax(np.abs(rf)))
    return CoherenceResult(mx, budget, bool(mx <= safety * budget + floor), rf)
