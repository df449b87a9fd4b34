"""Command-line interface: ``todachain <command> --config PATH [options]``.

Commands
--------
verify          residual reports for the configured family (JSON or CSV)
sample          ``x,y,z,u,residual`` rows on the grid (CSV)
sweep           h-refinement (``mode = fd``) or eps-refinement study
discrete-limit  eps-refinement of the discrete chain (sweep with ``mode = discrete``)
recurrence      alpha chain, truncation coherence and T-symmetry reports

Exit codes: 0 every check passed, 1 a residual check failed, 2 the run
could not be executed.  ``TODA_LOG`` (quiet, info, debug) sets the
logging level on stderr.
"""

from __future__ import annotations

import argparse
import io
import json
import logging
import math
import os
import sys
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .config import RunConfig, parse_config, parse_grid
from .errors import RangeError, TodaError
from .numcore import Grid3, ScalarField3, StencilConfig
from .residuals import ResidualReport, derivative_field, evaluate_on_grid, pointwise, report_from_values, run_checks

__all__ = ["main", "REPORT_SCHEMA", "build_family", "cmd_verify", "cmd_sample", "cmd_sweep", "cmd_recurrence", "cmd_discrete_limit"]

log = logging.getLogger("todachain")

EXIT_PASS, EXIT_FAIL, EXIT_ERROR = 0, 1, 2

_NUM = {"type": "number"}
_VEC3 = {"type": "array", "items": _NUM, "minItems": 3, "maxItems": 3}

# JSON Schema (draft 2020-12) for the verify/recurrence report envelope.
REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["family", "grid", "stencil", "reports", "pass", "errors"],
    "additionalProperties": False,
    "properties": {
        "family": {"type": "string"},
        "grid": {
            "type": "object",
            "required": ["origin", "spacing", "counts"],
            "properties": {
                "origin": _VEC3,
                "spacing": _VEC3,
                "counts": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 3, "maxItems": 3},
            },
        },
        "stencil": {
            "type": "object",
            "required": ["h", "order", "richardson_levels"],
            "properties": {
                "h": {"type": "number", "exclusiveMinimum": 0},
                "order": {"enum": [2, 4]},
                "richardson_levels": {"type": "integer", "minimum": 0},
                "relative": {"type": "boolean"},
            },
        },
        "reports": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["kind", "max_abs", "rms", "n_points", "n_skipped", "worst_point", "wall_ms"],
                "additionalProperties": False,
                "properties": {
                    "kind": {"type": "string"},
                    "max_abs": {"type": "number", "minimum": 0},
                    "rms": {"type": "number", "minimum": 0},
                    "n_points": {"type": "integer", "minimum": 0},
                    "n_skipped": {"type": "integer", "minimum": 0},
                    "worst_point": _VEC3,
                    "wall_ms": {"type": "integer", "minimum": 0},
                },
            },
        },
        "pass": {"type": "boolean"},
        "errors": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["type", "message"],
                "properties": {"type": {"type": "string"}, "message": {"type": "string"}},
            },
        },
    },
}


# --- family construction ----------------------------------------------------


@dataclass
class Family:
    """A configured family: its field and a report bundle factory."""

    name: str
    u: ScalarField3
    verify: Callable[[Grid3, StencilConfig, int], list]
    extra: dict = field(default_factory=dict)


def _monge(cfg: RunConfig) -> Family:
    from .families import monge as M

    sec = cfg.section("monge")
    prof = {
        "u": lambda: M.linear_profile(0.0, 1.0),
        "u^2": M.square_profile,
        "exp(u)": M.exp_profile,
        "linear": lambda: M.linear_profile(sec["c0"], sec["c1"]),
    }[sec["F"]]()
    policy = M.BracketPolicy(sec["bracket_lo"], sec["bracket_hi"])
    u = M.monge_field(prof, sec["variant"], policy)

    def verify(grid, stencil, threads):
        return M.monge_verify(prof, sec["variant"], grid, stencil, policy, field=u, threads=threads)

    return Family(f"monge[{prof.description},{sec['variant']}]", u, verify)


def parse_modes(text: str):
    """``"lam:amp:g0:g1; ..."`` to mode tuples."""
    modes = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = chunk.split(":")
        if len(parts) != 4:
            raise RangeError(f"ward mode {chunk!r} must be lam:amp:g0:g1")
        modes.append(tuple(float(p) for p in parts))
    if not modes:
        raise RangeError("ward needs at least one mode")
    return tuple(modes)


def _ward(cfg: RunConfig) -> Family:
    from .families import ward as W

    sec = cfg.section("ward")
    params = W.WardParams(sec["A"], sec["B"], parse_modes(sec["modes"]), sec["u0"])
    hmap = W.ward_map(params, (sec["u_min"], sec["u_max"]), sigma_method=sec["sigma"])
    u = W.ward_field(hmap, params)

    def verify(grid, stencil, threads):
        return W.ward_verify(hmap, params, grid, stencil, threads=threads)

    return Family(f"ward[A={params.A},B={params.B}]", u, verify, {"hmap": hmap, "params": params})


def parse_wl(text: str):
    """``"poly:n:amp; exp:k:r:amp; sep:k:plus|minus:amp; printed"`` to W_L terms."""
    from .families import firstterm as FT

    terms = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        kind, *args = chunk.split(":")
        if kind == "printed" and not args:
            terms.append(FT.ExpPolyWL(2.0, -1.0))
        elif kind == "poly" and len(args) == 2:
            terms.append(FT.polynomial_WL(int(args[0]), float(args[1])))
        elif kind == "exp" and len(args) == 3:
            terms.append(FT.ExpPolyWL(float(args[2]), float(args[0]), float(args[1])))
        elif kind == "sep" and len(args) == 3:
            terms.append(FT.separable_WL(float(args[0]), args[1], FT.PRINTED_COEFFS, float(args[2])))
        else:
            raise RangeError(f"cannot parse W_L term {chunk!r}")
    return FT.SumWL(tuple(terms))


def _firstterm(cfg: RunConfig) -> Family:
    from .families import firstterm as FT

    sec = cfg.section("firstterm")
    coeffs = FT.PRINTED_COEFFS if sec["reading"] == "printed" else FT.REDERIVED_COEFFS
    gf = FT.GeneratingFunction(parse_wl(sec["WL"]), float(sec["s"]), coeffs)
    fields = FT.firstterm_fields(gf)

    def verify(grid, stencil, threads):
        return FT.firstterm_verify(gf, grid, stencil, threads=threads)

    return Family(f"firstterm[s={gf.s:+g},WL={sec['WL'] or '0'}]", fields.u, verify, {"gf": gf, "fields": fields})


def _secondstep(cfg: RunConfig) -> Family:
    from .families import secondstep as SS

    sec = cfg.section("secondstep")
    if sec["measure"] == "characteristic":
        measure = SS.characteristic_measure(sec["m"], sec["t_max"], sec["panels"], sec["nodes_per_panel"])
    else:
        measure = SS.box_measure(sec["k_range"], sec["p_range"], sec["box_nodes"])
    F = {
        "characteristic": lambda: SS.characteristic_line_F(sec["m"]),
        "printed": SS.printed_F,
        "rederived": SS.rederived_F,
    }[sec["F"]]()
    maps = SS.secondstep_XYZ(SS.build_Q(measure, F), sec["f"])
    s0 = SS.StateABC(sec["a0"], sec["b0"], sec["c0"])
    fields = SS.secondstep_fields(maps, s0)

    def verify(grid, stencil, threads):
        return SS.secondstep_verify(maps, grid, s0, stencil, threads)

    return Family(f"secondstep[{measure.label},F={sec['F']},f={list(sec['f'])}]", fields.u, verify, {"maps": maps, "s0": s0})


def _custom(cfg: RunConfig) -> Family:
    from .families import closed

    sec = cfg.section("custom")
    if sec["field"] == "linear_fraction":
        u = closed.linear_fraction(sec["a0"], sec["a1"], sec["a3"], sec["a4"], sec["a5"])
    else:
        u = closed.liouville(sec["c"])

    def verify(grid, stencil, threads):
        return run_checks([("toda", pointwise("toda", u, cfg=stencil))], grid, stencil, u.name, threads)

    return Family(u.name, u, verify)


_BUILDERS = {"monge": _monge, "ward": _ward, "firstterm": _firstterm, "secondstep": _secondstep, "custom": _custom}


def build_family(cfg: RunConfig, name: str | None = None) -> Family:
    name = name or cfg.family
    if name == "recurrence":
        name = cfg.section("recurrence")["source"]
    return _BUILDERS[name](cfg)


def linearization_checks(u: ScalarField3, stencil: StencilConfig):
    """Symmetry residuals of ``S = u_x, u_y, u_z`` (translations of a solution)."""
    return [(f"symmetry.u_{ax}", pointwise("symmetry", u, derivative_field(u, ax, stencil), cfg=stencil)) for ax in "xyz"]


# --- output -----------------------------------------------------------------


def _fmt(v) -> str:
    return "" if v is None or (isinstance(v, float) and math.isnan(v)) else format(float(v), ".17g")


def _envelope(cfg: RunConfig, family: str, grid: Grid3, reports, ok: bool, errors, timing: bool) -> dict:
    return {
        "family": family,
        "grid": grid.to_dict(),
        "stencil": cfg.stencil.to_dict(),
        "reports": [r.to_dict(timing) for r in reports],
        "pass": bool(ok),
        "errors": errors,
    }


def _reports_csv(reports, timing: bool) -> str:
    buf = io.StringIO()
    buf.write("kind,max_abs,rms,n_points,n_skipped,worst_x,worst_y,worst_z,wall_ms\n")
    for r in reports:
        d = r.to_dict(timing)
        row = [d["kind"], _fmt(d["max_abs"]), _fmt(d["rms"]), str(d["n_points"]), str(d["n_skipped"])]
        row += [_fmt(v) for v in d["worst_point"]] + [str(d["wall_ms"])]
        buf.write(",".join(row) + "\n")
    return buf.getvalue()


def _write(cfg: RunConfig, text: str):
    if cfg.output_path:
        with open(cfg.output_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_bundle(cfg, family, grid, reports, ok, errors, timing):
    if cfg.output_format == "json":
        text = json.dumps(_envelope(cfg, family, grid, reports, ok, errors, timing), indent=2) + "\n"
    else:
        text = _reports_csv(reports, timing)
        for e in errors:
            text += f"# error: {e['type']}: {e['message']}\n"
    _write(cfg, text)


def _error_record(exc: BaseException) -> dict:
    return {"type": type(exc).__name__, "message": str(exc)}


# --- commands ---------------------------------------------------------------


@dataclass
class Options:
    threads: int = 1
    timing: bool = False


def cmd_verify(cfg: RunConfig, opts: Options = Options()) -> int:
    """Run the family's report bundle; exit 0 iff every ``max_abs <= tolerance``."""
    try:
        fam = build_family(cfg)
        if cfg.family == "recurrence":
            return cmd_recurrence(cfg, opts)
        reports = fam.verify(cfg.grid, cfg.stencil, opts.threads)
        if cfg.linearization:
            reports += run_checks(linearization_checks(fam.u, cfg.stencil), cfg.grid, cfg.stencil, fam.name, opts.threads)
    except (TodaError, ValueError, ArithmeticError) as exc:
        log.error("verify failed: %s", exc)
        _emit_bundle(cfg, cfg.family, cfg.grid, [], False, [_error_record(exc)], opts.timing)
        return EXIT_ERROR
    ok = all(r.passed(cfg.tolerance) for r in reports)
    for r in reports:
        log.info("%s %s max_abs=%.3e skipped=%d", fam.name, r.kind, r.max_abs, r.n_skipped)
    _emit_bundle(cfg, fam.name, cfg.grid, reports, ok, [], opts.timing)
    return EXIT_PASS if ok else EXIT_FAIL


def cmd_sample(cfg: RunConfig, opts: Options = Options()) -> int:
    """CSV rows ``x,y,z,u,residual`` (Toda residual); skipped cells left empty."""
    try:
        fam = build_family(cfg)
        X, Y, Z = (a.ravel() for a in cfg.grid.mesh())
        uvals, _ = evaluate_on_grid(fam.u.values, cfg.grid, opts.threads)
        res, _ = evaluate_on_grid(pointwise("toda", fam.u, cfg=cfg.stencil), cfg.grid, opts.threads)
    except (TodaError, ValueError, ArithmeticError) as exc:
        log.error("sample failed: %s", exc)
        _write(cfg, f"# error: {type(exc).__name__}: {exc}\n")
        return EXIT_ERROR
    buf = io.StringIO()
    buf.write("x,y,z,u,residual\n")
    skipped = 0
    for x, y, z, u, r in zip(X, Y, Z, uvals, res):
        if not (math.isfinite(u) and math.isfinite(r)):
            skipped += 1
            u = r = float("nan")
        buf.write(f"{_fmt(x)},{_fmt(y)},{_fmt(z)},{_fmt(u)},{_fmt(r)}\n")
    buf.write(f"# skipped: {skipped}\n")
    _write(cfg, buf.getvalue())
    return EXIT_PASS


def _observed(steps, vals):
    orders = [None]
    for (h1, r1), (h2, r2) in zip(zip(steps, vals), zip(steps[1:], vals[1:])):
        if r1 > 0 and r2 > 0:
            orders.append(math.log(r1 / r2) / math.log(h1 / h2))
        else:
            orders.append(None)
    return orders


def cmd_sweep(cfg: RunConfig, opts: Options = Options(), mode: str | None = None) -> int:
    """Refinement study; CSV ``step,max_abs,observed_order``.

    ``mode = fd`` refines the stencil step of the Toda residual (expected
    order: the stencil order, band 0.1 for order 2 and 0.2 for order 4).
    ``mode = discrete`` refines the chain spacing eps of the discrete
    residual of ``rho = ln u`` (expected 2, band 0.2).  Passes when the last
    observed order lies in the band, or when every max_abs is below
    ``exact_floor`` (the family is exact for the scheme).
    """
    sec = cfg.section("sweep")
    mode = mode or sec["mode"]
    steps = list(sec["steps"] if mode == "fd" else sec["eps"])
    try:
        if len(steps) < 3:
            raise RangeError(f"sweep needs at least 3 step values, got {len(steps)}")
        if any(not s > 0 for s in steps):
            raise RangeError("sweep steps must be positive")
        fam = build_family(cfg)
        vals = []
        for s in steps:
            if mode == "fd":
                st = cfg.stencil.with_h(s)
                fn = pointwise("toda", fam.u, cfg=st)
            else:
                st = cfg.stencil
                ev = fam.u.values
                rho = ScalarField3(lambda x, y, z: np.log(ev(x, y, z)), name="rho")
                fn = pointwise("discrete", rho, cfg=st, eps=s)
            v, pts = evaluate_on_grid(fn, cfg.grid, opts.threads)
            vals.append(report_from_values(v, pts, cfg.grid, st, fam.name, f"{mode}@{s:g}").max_abs)
    except (TodaError, ValueError, ArithmeticError) as exc:
        log.error("sweep failed: %s", exc)
        _write(cfg, f"# error: {type(exc).__name__}: {exc}\n")
        return EXIT_ERROR
    expected = sec["expected"] or (float(cfg.stencil.order) if mode == "fd" else 2.0)
    band = sec["band"] or (0.1 if (mode == "fd" and cfg.stencil.order == 2) else 0.2)
    orders = _observed(steps, vals)
    exact = all(v <= sec["exact_floor"] for v in vals)
    last = orders[-1]
    ok = exact or (last is not None and abs(last - expected) <= band)
    buf = io.StringIO()
    buf.write(f"{'h' if mode == 'fd' else 'eps'},max_abs,observed_order\n")
    for s, v, o in zip(steps, vals, orders):
        buf.write(f"{_fmt(s)},{_fmt(v)},{_fmt(o)}\n")
    buf.write(f"# expected {expected:g} +- {band:g}; {'exact' if exact else 'pass' if ok else 'fail'}\n")
    _write(cfg, buf.getvalue())
    return EXIT_PASS if ok else EXIT_FAIL


def cmd_discrete_limit(cfg: RunConfig, opts: Options = Options()) -> int:
    return cmd_sweep(cfg, opts, mode="discrete")


def cmd_recurrence(cfg: RunConfig, opts: Options = Options()) -> int:
    """Alpha chain of the source field; passes iff truncation coherence holds.

    JSON reports: ``consistency`` (level ``n_top``), ``consistency.budget``
    (its ``max_abs`` is the pass threshold), and the gridded symmetry
    reports of ``T = u alpha_0``.  CSV: ``x,y,z,alpha_n_top,...,alpha_0``.
    """
    from . import recurrence as R

    sec = cfg.section("recurrence")
    try:
        fam = build_family(cfg, sec["source"])
        base = None
        if sec["gauge"] == "gamma":
            if "fields" not in fam.extra:
                raise RangeError("gauge = gamma needs source = firstterm")
            gam = fam.extra["fields"].gamma.values
            y0 = cfg.grid.origin.y
            base = {0: lambda x, z: gam(x, np.full_like(x, y0), z)}
        chain = R.alpha_chain(fam.u, sec["n_top"], cfg.grid, None, base, cfg.stencil)
        reports, ok = [], True
        if sec["n_top"] >= 1:
            coh = R.truncation_coherence(fam.u, cfg.grid, sec["n_top"], base, sec["safety"], cfg=cfg.stencil)
            reports.append(R._grid_report(coh.residual, cfg.grid, cfg.stencil, fam.name, "consistency"))
            thr = sec["safety"] * coh.budget + 1e-10
            reports.append(
                ResidualReport(fam.name, "consistency.budget", cfg.grid, cfg.stencil, thr, thr, reports[0].n_points, reports[0].n_skipped, reports[0].worst_point)
            )
            ok = coh.passed
        _, sym = R.T_from_chain(chain, cfg.stencil)
        reports += sym
    except (TodaError, ValueError, ArithmeticError) as exc:
        log.error("recurrence failed: %s", exc)
        _emit_bundle(cfg, "recurrence", cfg.grid, [], False, [_error_record(exc)], opts.timing)
        return EXIT_ERROR
    if cfg.output_format == "json":
        _emit_bundle(cfg, f"recurrence[{fam.name},n_top={sec['n_top']}]", cfg.grid, reports, ok, [], opts.timing)
    else:
        X, Y, Z = (a.ravel() for a in cfg.grid.mesh())
        cols = [chain.alpha(m).ravel() for m in range(chain.n_top, -1, -1)]
        buf = io.StringIO()
        buf.write("x,y,z," + ",".join(f"alpha_{m}" for m in range(chain.n_top, -1, -1)) + "\n")
        for i in range(X.size):
            buf.write(",".join([_fmt(X[i]), _fmt(Y[i]), _fmt(Z[i])] + [_fmt(c[i]) for c in cols]) + "\n")
        _write(cfg, buf.getvalue())
    return EXIT_PASS if ok else EXIT_FAIL


COMMANDS = {
    "verify": cmd_verify,
    "sample": cmd_sample,
    "sweep": cmd_sweep,
    "discrete-limit": cmd_discrete_limit,
    "recurrence": cmd_recurrence,
}


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="todachain", description="Construct and certify solution families of the continuous Toda chain.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", required=True, help="path to a key = value config file")
    p.add_argument("--out", help="output path (overrides [output] path; default stdout)")
    p.add_argument("--format", choices=("csv", "json"), help="output format (overrides [output] format)")
    p.add_argument("--tol", type=float, help="residual tolerance (overrides config)")
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1, help="worker threads (results do not depend on it)")
    p.add_argument("--grid", help='"x0:x1:nx,y0:y1:ny,z0:z1:nz" (overrides [grid])')
    p.add_argument("--timing", action="store_true", help="record wall_ms (otherwise 0, for byte-identical output)")
    return p


def _setup_logging():
    level = {"quiet": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}.get(os.environ.get("TODA_LOG", "quiet").lower(), logging.ERROR)
    if not log.handlers:
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
        log.addHandler(handler)
    log.setLevel(level)


def main(argv=None) -> int:
    _setup_logging()
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PASS if exc.code == 0 else EXIT_ERROR
    try:
        with open(args.config, encoding="utf-8") as fh:
            cfg = parse_config(fh.read())
        if args.grid:
            cfg.grid = parse_grid(args.grid)
        if args.out:
            cfg.output_path = args.out
        if args.format:
            cfg.output_format = args.format
        if args.tol is not None:
            if not args.tol > 0:
                raise RangeError("--tol must be positive")
            cfg.tolerance = args.tol
        if args.threads < 1:
            raise RangeError("--threads must be >= 1")
    except (OSError, TodaError, UnicodeDecodeError) as exc:
        sys.stderr.write(f"todachain: {type(exc).__name__}: {exc}\n")
        return EXIT_ERROR
    t0 = time.perf_counter()
    try:
        code = COMMANDS[args.command](cfg, Options(args.threads, args.timing))
    except OSError as exc:
        sys.stderr.write(f"todachain: {type(exc).__name__}: {exc}\n")
        return EXIT_ERROR
    log.info("%s finished in %.1f ms with exit %d", args.command, (time.perf_counter() - t0) * 1e3, code)
    return code if code in (EXIT_PASS, EXIT_FAIL, EXIT_ERROR) else EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
