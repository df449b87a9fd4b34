"""Finite differences, quadrature and root solvers shared by every family.

Everything here is vectorised over numpy arrays.  Scalar entry points
(``central_diff``, ``solve_scalar_root``, ...) raise on failure; the
``*_array`` / batch variants return NaN or a status code per element so
grid sweeps can skip bad points instead of aborting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import (
    DomainViolation,
    NoBracket,
    NoConvergence,
    NonFinite,
    NonPositiveField,
    SingularJacobian,
    TooFewSamples,
)

__all__ = [
    "Point3",
    "Grid3",
    "StencilConfig",
    "ScalarField3",
    "as_field",
    "central_diff",
    "second_diff",
    "mixed_diff_xy",
    "d1",
    "d2",
    "d11",
    "richardson",
    "solve_scalar_root",
    "root_bracket_array",
    "solve_newton_nd",
    "newton_batch",
    "NewtonResult",
    "cumulative_integral_y",
    "grid_d1",
]

AXES = {"x": 0, "y": 1, "z": 2}

# status codes of the batch solvers
OK, SINGULAR, NOCONV, NONFINITE, NOBRACKET = 0, 1, 2, 3, 4


def _axis(axis) -> int:
    if isinstance(axis, str):
        try:
            return AXES[axis]
        except KeyError:
            raise ValueError(f"unknown axis {axis!r}") from None
    if axis not in (0, 1, 2):
        raise ValueError(f"unknown axis {axis!r}")
    return int(axis)


@dataclass(frozen=True)
class Point3:
    x: float
    y: float
    z: float

    def __post_init__(self):
        for v in (self.x, self.y, self.z):
            if not math.isfinite(v):
                raise ValueError(f"non-finite coordinate in {self!r}")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.z)


@dataclass(frozen=True)
class Grid3:
    """Uniform tensor grid; ``counts[i] == 1`` collapses an axis to the origin."""

    origin: Point3
    spacing: tuple[float, float, float]
    counts: tuple[int, int, int]

    def __post_init__(self):
        if len(self.spacing) != 3 or len(self.counts) != 3:
            raise ValueError("spacing and counts need three entries")
        if any(not (h > 0) for h in self.spacing):
            raise ValueError(f"spacing must be positive, got {self.spacing}")
        if any(int(n) < 1 for n in self.counts):
            raise ValueError(f"counts must be >= 1, got {self.counts}")

    @classmethod
    def from_bounds(cls, bounds: Sequence[tuple[float, float, int]]) -> "Grid3":
        """Build from ``[(lo, hi, n)] * 3``; hi is included when ``n > 1``."""
        origin, spacing, counts = [], [], []
        for lo, hi, n in bounds:
            n = int(n)
            if n < 1:
                raise ValueError("counts must be >= 1")
            origin.append(float(lo))
            spacing.append((hi - lo) / (n - 1) if n > 1 else 1.0)
            counts.append(n)
        return cls(Point3(*origin), tuple(spacing), tuple(counts))

    @property
    def size(self) -> int:
        return int(np.prod(self.counts))

    def axes(self) -> list[np.ndarray]:
        o = self.origin.as_tuple()
        return [o[i] + self.spacing[i] * np.arange(self.counts[i]) for i in range(3)]

    def mesh(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return tuple(np.meshgrid(*self.axes(), indexing="ij"))

    def bounds(self) -> list[tuple[float, float, int]]:
        return [(a[0], a[-1], len(a)) for a in self.axes()]

    def to_dict(self) -> dict:
        return {
            "origin": list(self.origin.as_tuple()),
            "spacing": list(self.spacing),
            "counts": list(self.counts),
        }


@dataclass(frozen=True)
class StencilConfig:
    """Finite-difference settings.

    With ``relative=True`` the step along an axis is ``h * max(1, |coord|)``.
    """

    h: float = 1e-3
    order: int = 4
    richardson_levels: int = 0
    relative: bool = True

    def __post_init__(self):
        if not (self.h > 0):
            raise ValueError("h must be positive")
        if self.order not in (2, 4):
            raise ValueError("order must be 2 or 4")
        if self.richardson_levels < 0:
            raise ValueError("richardson_levels must be >= 0")

    def step(self, coord):
        if self.relative:
            return self.h * np.maximum(1.0, np.abs(coord))
        return self.h * np.ones_like(np.asarray(coord, dtype=float))

    def with_h(self, h: float) -> "StencilConfig":
        return StencilConfig(h, self.order, self.richardson_levels, self.relative)

    def to_dict(self) -> dict:
        return {
            "h": self.h,
            "order": self.order,
            "richardson_levels": self.richardson_levels,
            "relative": self.relative,
        }


class ScalarField3:
    """A real field of (x, y, z) with an optional domain predicate.

    ``func`` and ``domain`` must accept broadcastable numpy arrays.
    ``values`` returns NaN outside the domain (and wherever ``func`` is not
    finite); ``strict`` and ``__call__`` raise instead.  With
    ``implicit_domain=True`` a NaN from ``func`` itself marks a point outside
    the domain (used by root-solved fields, where failure to invert is the
    domain boundary).
    """

    def __init__(self, func, domain=None, name: str = "field", implicit_domain: bool = False):
        self.func = func
        self.domain = domain
        self.name = name
        self.implicit_domain = implicit_domain

    def values(self, x, y, z) -> np.ndarray:
        x, y, z = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (x, y, z)))
        with np.errstate(all="ignore"):
            out = np.array(self.func(x, y, z), dtype=float, copy=True)
            out = np.broadcast_to(out, x.shape).copy()
            if self.domain is not None:
                out[~np.asarray(self.domain(x, y, z), dtype=bool)] = np.nan
        out[~np.isfinite(out)] = np.nan
        return out

    def strict(self, x, y, z) -> np.ndarray:
        x, y, z = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (x, y, z)))
        if self.domain is not None:
            with np.errstate(all="ignore"):
                inside = np.asarray(self.domain(x, y, z), dtype=bool)
            if not np.all(inside):
                raise DomainViolation(f"{self.name}: point outside domain")
        with np.errstate(all="ignore"):
            out = np.broadcast_to(np.asarray(self.func(x, y, z), dtype=float), x.shape)
        if not np.all(np.isfinite(out)):
            if self.implicit_domain and np.any(np.isnan(out)):
                raise DomainViolation(f"{self.name}: point outside domain")
            raise NonFinite(f"{self.name}: non-finite value")
        return out

    def __call__(self, p: Point3) -> float:
        return float(self.strict(p.x, p.y, p.z))

    def contains(self, x, y, z) -> np.ndarray:
        if self.domain is None:
            return np.ones(np.broadcast(x, y, z).shape, dtype=bool)
        with np.errstate(all="ignore"):
            return np.asarray(self.domain(x, y, z), dtype=bool)


def as_field(f, name: str = "field") -> ScalarField3:
    return f if isinstance(f, ScalarField3) else ScalarField3(f, name=name)


def evaluator(f, strict: bool) -> Callable:
    f = as_field(f)
    return f.strict if strict else f.values


def positive(ev: Callable, strict: bool, floor: float = 1e-300) -> Callable:
    """Wrap an evaluator so values <= ``floor`` are domain violations."""

    def wrapped(x, y, z):
        v = ev(x, y, z)
        bad = ~(v > floor)
        if strict and np.any(bad):
            raise NonPositiveField("field is not positive on the stencil")
        if np.any(bad):
            v = np.where(bad, np.nan, v)
        return v

    return wrapped


# --- stencils -------------------------------------------------------------

# (offset, weight) pairs; each weight multiplies an antisymmetric (d1) or
# symmetric (d2) difference so that constants cancel exactly
_D1 = {
    2: ((1, 0.5),),
    4: ((1, 8 / 12), (2, -1 / 12)),
}
_D2 = {
    2: ((1, 1.0),),
    4: ((1, 16 / 12), (2, -1 / 12)),
}


def richardson(values: Sequence, order: int, ratio: float = 2.0):
    """Extrapolate approximations at steps h, h/r, h/r^2, ...

    The error expansion is assumed even: exponents ``order, order+2, ...``.
    """
    table = [np.asarray(v, dtype=float) for v in values]
    for j in range(1, len(table)):
        factor = ratio ** (order + 2 * (j - 1))
        table = [(factor * table[i + 1] - table[i]) / (factor - 1.0) for i in range(len(table) - 1)]
    return table[0]


def _with_richardson(stencil, cfg: StencilConfig):
    levels = cfg.richardson_levels
    if levels == 0:
        return stencil(1.0)
    return richardson([stencil(0.5**j) for j in range(levels + 1)], cfg.order)


def _shift(pts, ax, dh):
    q = list(pts)
    q[ax] = pts[ax] + dh
    return q


def d1(ev, x, y, z, axis, cfg: StencilConfig):
    """First derivative along ``axis`` with an evaluator ``ev(x, y, z)``."""
    ax = _axis(axis)
    pts = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (x, y, z)))
    h0 = cfg.step(pts[ax])

    def stencil(scale):
        h = h0 * scale
        acc = 0.0
        for k, c in _D1[cfg.order]:
            acc = acc + c * (ev(*_shift(pts, ax, k * h)) - ev(*_shift(pts, ax, -k * h)))
        return acc / h

    return _with_richardson(stencil, cfg)


def d2(ev, x, y, z, axis, cfg: StencilConfig):
    """Second derivative along ``axis``."""
    ax = _axis(axis)
    pts = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (x, y, z)))
    h0 = cfg.step(pts[ax])

    def stencil(scale):
        h = h0 * scale
        f0 = ev(*pts)
        acc = 0.0
        for k, c in _D2[cfg.order]:
            acc = acc + c * ((ev(*_shift(pts, ax, k * h)) - f0) + (ev(*_shift(pts, ax, -k * h)) - f0))
        return acc / (h * h)

    return _with_richardson(stencil, cfg)


def d11(ev, x, y, z, axes, cfg: StencilConfig):
    """Mixed derivative over two distinct axes (tensor product of d1 stencils)."""
    a, b = (_axis(s) for s in axes)
    if a == b:
        return d2(ev, x, y, z, a, cfg)
    pts = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (x, y, z)))
    ha0, hb0 = cfg.step(pts[a]), cfg.step(pts[b])
    weights = _D1[cfg.order]

    def stencil(scale):
        ha, hb = ha0 * scale, hb0 * scale
        acc = 0.0
        for i, ci in weights:
            for j, cj in weights:
                def f(si, sj):
                    q = list(pts)
                    q[a] = pts[a] + si * i * ha
                    q[b] = pts[b] + sj * j * hb
                    return ev(*q)

                acc = acc + ci * cj * ((f(1, 1) - f(-1, 1)) - (f(1, -1) - f(-1, -1)))
        return acc / (ha * hb)

    return _with_richardson(stencil, cfg)


def central_diff(f, p: Point3, axis, cfg: StencilConfig = StencilConfig()) -> float:
    """Central-difference first derivative of ``f`` at ``p``."""
    return float(d1(evaluator(f, True), p.x, p.y, p.z, axis, cfg))


def second_diff(f, p: Point3, axis, cfg: StencilConfig = StencilConfig()) -> float:
    """Central-difference second derivative of ``f`` at ``p``."""
    return float(d2(evaluator(f, True), p.x, p.y, p.z, axis, cfg))


def mixed_diff_xy(f, p: Point3, cfg: StencilConfig = StencilConfig()) -> float:
    """Cross-stencil approximation of the mixed derivative in x and y."""
    return float(d11(evaluator(f, True), p.x, p.y, p.z, ("x", "y"), cfg))


# --- scalar roots ---------------------------------------------------------


def _fd_slope(g, u):
    du = 1e-7 * np.maximum(1.0, np.abs(u))
    return (g(u + du) - g(u - du)) / (2 * du)


def root_bracket_array(g, lo, hi, dg=None, tol: float = 1e-12, max_iter: int = 200):
    """Safeguarded Newton/bisection on arrays of independent brackets.

    ``g`` is elementwise and is always called on the full array, so it may
    close over per-point data of the same shape.  Returns
    ``(root, status, iterations)``; status is 0 on success, 4 (no bracket),
    3 (non-finite) or 2 (no convergence).  The root always lies inside its
    bracket.
    """
    slope = dg if dg is not None else (lambda u: _fd_slope(g, u))
    with np.errstate(all="ignore"):
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        glo = np.asarray(g(lo), dtype=float)
        ghi = np.asarray(g(hi), dtype=float)
    shape = np.broadcast_shapes(lo.shape, hi.shape, glo.shape, ghi.shape)
    lo, hi, glo, ghi = (np.broadcast_to(a, shape).copy() for a in (lo, hi, glo, ghi))
    status = np.full(shape, NOCONV, dtype=int)
    iters = np.zeros(shape, dtype=int)
    status[~(np.isfinite(glo) & np.isfinite(ghi))] = NONFINITE
    status[(status == NOCONV) & (glo * ghi > 0)] = NOBRACKET
    x = np.where(glo == 0, lo, np.where(ghi == 0, hi, 0.5 * (lo + hi)))
    status[(status == NOCONV) & ((glo == 0) | (ghi == 0))] = OK
    # orient so that g(a) < 0 < g(b)
    a = np.where(glo < 0, lo, hi)
    b = np.where(glo < 0, hi, lo)
    eps = np.finfo(float).eps
    with np.errstate(all="ignore"):
        for _ in range(max_iter):
            active = status == NOCONV
            if not np.any(active):
                break
            gx = np.broadcast_to(np.asarray(g(x), dtype=float), shape)
            iters[active] += 1
            done = np.abs(gx) <= tol
            bad = ~np.isfinite(gx)
            a = np.where(active & (gx < 0), x, a)
            b = np.where(active & (gx > 0), x, b)
            width_done = np.abs(b - a) <= 4 * eps * np.maximum(1.0, np.abs(x))
            s = np.broadcast_to(np.asarray(slope(x), dtype=float), shape)
            newton = x - gx / s
            lo_b, hi_b = np.minimum(a, b), np.maximum(a, b)
            ok_newton = np.isfinite(newton) & (newton > lo_b) & (newton < hi_b)
            xn = np.where(ok_newton, newton, 0.5 * (a + b))
            stop = done | bad | width_done
            x = np.where(active & ~stop, xn, x)
            status = np.where(active & (done | width_done), OK, status)
            status = np.where(active & bad, NONFINITE, status)
        # one polishing Newton step brings converged roots to round-off
        ok = status == OK
        if np.any(ok):
            gx = np.broadcast_to(np.asarray(g(x), dtype=float), shape)
            s = np.broadcast_to(np.asarray(slope(x), dtype=float), shape)
            xn = x - gx / s
            gn = np.broadcast_to(np.asarray(g(xn), dtype=float), shape)
            lo_b, hi_b = np.minimum(lo, hi), np.maximum(lo, hi)
            take = ok & np.isfinite(gn) & (np.abs(gn) <= np.abs(gx)) & (xn >= lo_b) & (xn <= hi_b)
            x = np.where(take, xn, x)
    return x, status, iters


def solve_scalar_root(g, seed, tol: float = 1e-12, max_iter: int = 200, dg=None) -> float:
    """Find a root of the scalar function ``g``.

    Parameters
    ----------
    g : callable
        Function of one real variable.
    seed : tuple or float
        ``(lo, hi)`` selects bracket mode (guaranteed convergence, the root
        stays in the bracket); a float selects Newton from that guess.
    tol : float
        Target ``|g(root)|``.
    dg : callable, optional
        Derivative of ``g``; central differences are used otherwise.
    """
    if isinstance(seed, (tuple, list)):
        lo, hi = (float(s) for s in seed)
        glo, ghi = g(lo), g(hi)
        if not (math.isfinite(glo) and math.isfinite(ghi)):
            raise NonFinite("g is not finite at the bracket ends")
        if glo * ghi > 0:
            raise NoBracket(f"no sign change on [{lo}, {hi}]")
        x, status, _ = root_bracket_array(g, lo, hi, dg=dg, tol=tol, max_iter=max_iter)
        status = int(status)
        if status == NONFINITE:
            raise NonFinite("g returned a non-finite value")
        if status != OK:
            raise NoConvergence("bracketed solver hit its iteration cap")
        return float(x)

    slope = dg if dg is not None else (lambda u: float(_fd_slope(g, u)))
    x = float(seed)
    for _ in range(max_iter):
        gx = g(x)
        if not math.isfinite(gx):
            raise NonFinite("g returned a non-finite value")
        if abs(gx) <= tol:
            return x
        s = slope(x)
        if not math.isfinite(s):
            raise NonFinite("derivative is not finite")
        if s == 0.0:
            raise SingularJacobian(f"zero derivative at {x}")
        step = gx / s
        t = 1.0
        while t > 2.0**-20:
            xn = x - t * step
            gn = g(xn)
            if math.isfinite(gn) and abs(gn) < abs(gx):
                break
            t *= 0.5
        x = xn
    if abs(g(x)) <= tol:
        return x
    raise NoConvergence("Newton iteration cap reached")


# --- Newton in R^n --------------------------------------------------------


@dataclass
class NewtonResult:
    x: np.ndarray
    status: np.ndarray
    iterations: np.ndarray
    residual: np.ndarray = field(default=None)

    @property
    def ok(self) -> np.ndarray:
        return self.status == OK


def _fd_jacobian(G, v, args):
    n = v.shape[-1]
    g0 = G(v, *args)
    cols = []
    for j in range(n):
        dv = np.zeros_like(v)
        hj = 1e-7 * np.maximum(1.0, np.abs(v[..., j]))
        dv[..., j] = hj
        cols.append((G(v + dv, *args) - G(v - dv, *args)) / (2 * hj[..., None]))
    return g0, np.stack(cols, axis=-1)


def newton_batch(
    G,
    guess,
    jac=None,
    tol: float = 1e-10,
    max_iter: int = 60,
    polish: int = 1,
    singular_rtol: float = 1e-14,
    args: tuple = (),
) -> NewtonResult:
    """Damped Newton on a batch of independent n-dimensional systems.

    ``G(V, *args)`` maps ``(N, n)`` to ``(N, n)``; ``jac(V, *args)``
    (optional, central differences otherwise) maps to ``(N, n, n)``.  Each
    entry of ``args`` has leading dimension N and is sliced together with
    the rows of ``V``.  The step is halved until the residual max-norm
    strictly decreases, down to a factor 2**-20.  After convergence
    ``polish`` extra undamped steps bring the roots to round-off, which
    keeps implicitly defined fields smooth under finite differencing.
    """
    v = np.array(guess, dtype=float, copy=True)
    if v.ndim == 1:
        v = v[None, :]
    N, n = v.shape
    args = tuple(np.asarray(a) for a in args)
    status = np.full(N, NOCONV, dtype=int)
    iters = np.zeros(N, dtype=int)
    resid = np.full(N, np.inf)

    def sub(idx):
        return tuple(a[idx] for a in args)

    def evaluate(vv, idx):
        with np.errstate(all="ignore"):
            if jac is None:
                g, J = _fd_jacobian(G, vv, sub(idx))
            else:
                g, J = G(vv, *sub(idx)), jac(vv, *sub(idx))
        return np.asarray(g, dtype=float), np.asarray(J, dtype=float)

    def gnorm(vv, idx):
        with np.errstate(all="ignore"):
            return np.max(np.abs(np.asarray(G(vv, *sub(idx)), dtype=float)), axis=-1)

    active = np.ones(N, dtype=bool)
    while True:
        idx = np.nonzero(active)[0]
        if idx.size == 0:
            break
        vv = v[idx]
        g, J = evaluate(vv, idx)
        norm = np.max(np.abs(g), axis=-1)
        resid[idx] = norm
        bad = ~np.all(np.isfinite(g), axis=-1) | ~np.all(np.isfinite(J), axis=(-2, -1))
        conv = (norm <= tol) & ~bad
        capped = ~bad & ~conv & (iters[idx] >= max_iter)
        status[idx[bad]] = NONFINITE
        status[idx[conv]] = OK
        go = ~bad & ~conv & ~capped
        active[idx[~go]] = False
        idx, vv, g, J, norm = idx[go], vv[go], g[go], J[go], norm[go]
        if idx.size == 0:
            continue
        det = np.linalg.det(J)
        scale = np.prod(np.linalg.norm(J, axis=-1), axis=-1)
        sing = ~(np.abs(det) > singular_rtol * scale)
        status[idx[sing]] = SINGULAR
        active[idx[sing]] = False
        idx, vv, g, J, norm = idx[~sing], vv[~sing], g[~sing], J[~sing], norm[~sing]
        if idx.size == 0:
            continue
        step = np.linalg.solve(J, g[..., None])[..., 0]
        t = np.ones(idx.size)
        trial = vv - step
        tn = gnorm(trial, idx)
        need = ~(tn < norm)
        while np.any(need):
            t[need] = np.maximum(0.5 * t[need], 2.0**-20)
            trial[need] = vv[need] - t[need, None] * step[need]
            tn[need] = gnorm(trial[need], idx[need])
            need = need & ~(tn < norm) & (t > 2.0**-20)
        v[idx] = trial
        iters[idx] += 1

    done = np.nonzero(status == OK)[0]
    for _ in range(polish):
        if done.size == 0:
            break
        g, J = evaluate(v[done], done)
        with np.errstate(all="ignore"):
            det = np.linalg.det(J)
            fine = np.isfinite(det) & (det != 0)
            step = np.zeros_like(g)
            if np.any(fine):
                step[fine] = np.linalg.solve(J[fine], g[fine][..., None])[..., 0]
        trial = v[done] - step
        tn = gnorm(trial, done)
        keep = fine & np.isfinite(tn) & (tn <= np.maximum(np.max(np.abs(g), axis=-1), tol))
        v[done[keep]] = trial[keep]
        resid[done[keep]] = tn[keep]
    return NewtonResult(v, status, iters, resid)


def solve_newton_nd(G, guess, jac=None, tol: float = 1e-10, max_iter: int = 60) -> np.ndarray:
    """Solve ``G(v) = 0`` for a single vector ``v`` (n = 2 or 3).

    ``G`` and ``jac`` take a 1-D vector.  Raises ``SingularJacobian`` or
    ``NoConvergence``.
    """
    guess = np.asarray(guess, dtype=float)
    if guess.ndim != 1 or not np.all(np.isfinite(guess)):
        raise ValueError("guess must be a finite vector")

    def Gb(V):
        return np.stack([np.asarray(G(row), dtype=float) for row in V])

    jb = None if jac is None else (lambda V: np.stack([np.asarray(jac(row), dtype=float) for row in V]))
    res = newton_batch(Gb, guess[None, :], jac=jb, tol=tol, max_iter=max_iter, polish=0)
    st = int(res.status[0])
    if st == SINGULAR:
        raise SingularJacobian("Jacobian determinant below 1e-14 * scale")
    if st == NONFINITE:
        raise NonFinite("non-finite residual or Jacobian")
    if st != OK:
        raise NoConvergence(f"no convergence in {max_iter} iterations")
    return res.x[0]


# --- quadrature -----------------------------------------------------------


def cumulative_integral_y(samples, hy: float, axis: int = -1) -> np.ndarray:
    """Running integral of uniformly spaced samples, starting from 0.

    Even indices use composite Simpson, odd indices Simpson plus a 3/8-rule
    panel, and the first interval a four-point cubic rule, so the result is
    exact on cubics.  With only two samples this is the trapezoid rule.
    """
    f = np.moveaxis(np.asarray(samples, dtype=float), axis, -1)
    n = f.shape[-1]
    if n < 2:
        raise TooFewSamples("need at least two samples")
    out = np.zeros_like(f)
    if n == 2:
        out[..., 1] = 0.5 * hy * (f[..., 0] + f[..., 1])
        return np.moveaxis(out, -1, axis)
    if n == 3:
        out[..., 1] = hy * (5 * f[..., 0] + 8 * f[..., 1] - f[..., 2]) / 12
    else:
        out[..., 1] = hy * (9 * f[..., 0] + 19 * f[..., 1] - 5 * f[..., 2] + f[..., 3]) / 24
    simpson = hy / 3 * (f[..., 0:-2:2] + 4 * f[..., 1:-1:2] + f[..., 2::2])
    out[..., 2::2] = np.cumsum(simpson, axis=-1)
    for j in range(3, n, 2):
        base = out[..., j - 3]
        panel = 3 * hy / 8 * (f[..., j - 3] + 3 * f[..., j - 2] + 3 * f[..., j - 1] + f[..., j])
        out[..., j] = base + panel
    return np.moveaxis(out, -1, axis)


def grid_d1(values, h: float, axis: int, order: int = 4) -> np.ndarray:
    """Central difference of gridded data; the stencil margin is NaN."""
    f = np.moveaxis(np.asarray(values, dtype=float), axis, -1)
    out = np.full_like(f, np.nan)
    if order == 2:
        out[..., 1:-1] = (f[..., 2:] - f[..., :-2]) / (2 * h)
    else:
        out[..., 2:-2] = (f[..., :-4] - 8 * f[..., 1:-3] + 8 * f[..., 3:-1] - f[..., 4:]) / (12 * h)
    return np.moveaxis(out, -1, axis)
