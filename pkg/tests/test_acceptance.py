"""Acceptance suite: one test per numbered criterion, one PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py`` or ``python tests/test_acceptance.py``.
The verdict lines are repeated in the pytest terminal summary.
"""

import json
import sys
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))
from conftest import VERDICTS  # noqa: E402

from todachain.cli import linearization_checks, main  # noqa: E402
from todachain.families.closed import linear_fraction, liouville  # noqa: E402
from todachain.families.firstterm import (  # noqa: E402
    REDERIVED_COEFFS,
    GeneratingFunction,
    closed_form_state,
    firstterm_fields,
    firstterm_verify,
    printed_example_gf,
    polynomial_WL,
)
from todachain.families.monge import linear_profile, monge_field, monge_verify, square_profile  # noqa: E402
from todachain.families.secondstep import (  # noqa: E402
    StateABC,
    SpectralMeasure,
    build_L,
    build_Q,
    characteristic_line_F,
    characteristic_measure,
    F_characteristic_solve,
    F_pde_residual,
    printed_F,
    q_equation1_residual,
    rederived_F,
    secondstep_fields,
    secondstep_XYZ,
    trace_identity_check,
)
from todachain.families.ward import (  # noqa: E402
    WardParams,
    loop_integral,
    ward_field,
    ward_limit_excess,
    ward_map,
    ward_verify,
)
from todachain.numcore import Grid3, StencilConfig  # noqa: E402
from todachain.recurrence import alpha_chain, truncation_coherence  # noqa: E402
from todachain.residuals import evaluate_on_grid, residual_report, run_checks  # noqa: E402

CFG = StencilConfig()
MONGE_A = Grid3.from_bounds([(0.5, 1.5, 11), (-0.4, 0.4, 11), (0.2, 1.0, 11)])
MONGE_B = Grid3.from_bounds([(-0.4, 0.4, 11), (0.5, 1.5, 11), (0.2, 1.0, 11)])
FT = Grid3.from_bounds([(1, 2, 11), (-2, -1, 11), (-0.5, 0.5, 11)])
WARD = Grid3.from_bounds([(1, 2, 9), (-0.5, 0.5, 9), (-0.2, 0.2, 9)])
TWO_MODES = WardParams(1.0, 0.5, ((0.0, 1.0, 1.0, 1.0), (0.5, 0.05, 1.0, 0.0)))
S0 = StateABC(0.2, 0.3, 0.1)


@contextmanager
def criterion(n, title):
    """Yield a ``check(name, value, ok)`` recorder; emit one verdict line on exit."""
    notes, failed = [], []

    def check(name, value, ok):
        notes.append(f"{name}={value:.3g}" if isinstance(value, float) else f"{name}={value}")
        if not ok:
            failed.append(name)

    err = None
    try:
        yield check
    except Exception as exc:  # recorded, then re-raised
        err = exc
    verdict = "PASS" if not failed and err is None else "FAIL"
    extra = f" error={type(err).__name__}: {err}" if err else ""
    line = f"criterion {n:>2} {verdict}  {title}: {', '.join(notes)}{extra}"
    VERDICTS[n] = line
    print(line)
    if err is not None:
        raise err
    assert not failed, line


def _timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


def _cli(tmp_path, name, text, *args):
    cfg = tmp_path / f"{name}.cfg"
    cfg.write_text(text)
    out = tmp_path / f"{name}-{len(list(tmp_path.iterdir()))}.out"
    code = main([*args[:1], "--config", str(cfg), "--out", str(out), *args[1:]])
    return code, out.read_text()


def _sweep_orders(text):
    rows = [r.split(",") for r in text.splitlines()[1:] if not r.startswith("#")]
    return [float(r[2]) for r in rows if r[2]]


def test_c01_exact_families():
    with criterion(1, "exact families on 11^3") as check:
        cases = {
            "monge-u-A": lambda: residual_report(monge_field(linear_profile(), "A"), MONGE_A),
            "monge-u-B": lambda: residual_report(monge_field(linear_profile(), "B"), MONGE_B),
            "linfrac": lambda: residual_report(linear_fraction(0.2, 1.0, 0.7, -1.0, 1.3), MONGE_A),
        }
        for name, run in cases.items():
            rep, dt = _timed(run)
            check(name, rep.max_abs, rep.max_abs < 1e-7 and rep.n_skipped == 0)
            check(f"{name}.s", dt, dt < 2.0)


def test_c02_solver_family():
    with criterion(2, "Monge F(u)=u^2") as check:
        u = monge_field(square_profile(), "A")
        reps = monge_verify(square_profile(), "A", MONGE_A, field=u)
        for r in reps:
            check(r.kind, r.max_abs, r.max_abs < 1e-6 and r.n_skipped == 0)
        check("newton.mean", float(u.func.mean_iterations), u.func.mean_iterations <= 20)


SMOOTH = {
    "liouville": "family = custom\n[custom]\nfield = liouville\n[grid]\nx = -0.5:0.5:5\ny = -0.5:0.5:5\nz = -0.5:0.5:5\n",
    "monge-u2": "family = monge\n[monge]\nF = u^2\n[grid]\nx = 0.5:1.5:5\ny = -0.4:0.4:5\nz = 0.2:1.0:5\n",
}


def test_c03_fd_orders(tmp_path):
    with criterion(3, "FD convergence orders via sweep") as check:
        for name, text in SMOOTH.items():
            for order, steps, band in ((2, "0.08, 0.04, 0.02", 0.1), (4, "0.1, 0.05, 0.025", 0.2)):
                code, out = _cli(tmp_path, name, text + f"[stencil]\norder = {order}\n[sweep]\nsteps = {steps}\n", "sweep")
                last = _sweep_orders(out)[-1]
                check(f"{name}.o{order}", last, code == 0 and abs(last - order) <= band)


def test_c04_discrete_limit(tmp_path):
    with criterion(4, "discrete chain limit") as check:
        code, out = _cli(tmp_path, "disc", SMOOTH["monge-u2"], "discrete-limit")
        last = _sweep_orders(out)[-1]
        check("monge-u2.order", last, code == 0 and abs(last - 2) <= 0.2)
        zlin = {
            "monge-u": "family = monge\n[monge]\nF = u\n[grid]\nx = 0.5:1.5:5\ny = -0.4:0.4:5\nz = 0.2:0.8:5\n",
            "linfrac": "family = custom\n[custom]\na0 = 0.2\n[grid]\nx = 0.5:1.5:5\ny = -0.4:0.4:5\nz = 0.2:0.8:5\n",
        }
        for name, text in zlin.items():
            code, out = _cli(tmp_path, name, text, "discrete-limit")
            worst = max(float(r.split(",")[1]) for r in out.splitlines()[1:4])
            check(f"{name}.max", worst, code == 0 and worst < 1e-9)


def test_c05_ward():
    with criterion(5, "two-mode Ward pipeline") as check:
        hmap = ward_map(TWO_MODES)
        loop = abs(loop_integral(hmap.sigma.du, hmap.sigma.dw, (1.0, 2.0, 0.0, 1.0)))
        check("loop", loop, loop < 1e-8)
        reps = {r.kind: r for r in ward_verify(hmap, TWO_MODES, WARD)}
        check("constraint", reps["constraint"].max_abs, reps["constraint"].max_abs < 1e-8)
        check("toda", reps["toda"].max_abs, reps["toda"].max_abs < 1e-6 and reps["toda"].n_skipped == 0)
        Lam = 100.0
        p = WardParams(Lam, -Lam, TWO_MODES.modes)
        u = ward_field(ward_map(p), p)
        # the image of the hodograph chart is a strip of width ~1/Lam around (1.05, 0)
        g = Grid3.from_bounds([(1.03, 1.07, 9), (-0.02, 0.02, 9), (-0.01 / Lam, 0.01 / Lam, 9)])
        vals, _ = evaluate_on_grid(ward_limit_excess(u, Lam, CFG), g)
        excess = float(np.nanmax(vals))
        check("limit.excess", excess, np.isfinite(vals).all() and excess <= 0.0)


def test_c06_firstterm():
    with criterion(6, "first-term family") as check:
        F = firstterm_fields(GeneratingFunction())
        X, Y, Z = FT.mesh()
        cb, cg = closed_form_state(X, Y, Z)
        db = float(np.max(np.abs(F.beta.values(X, Y, Z) - cb)))
        dg = float(np.max(np.abs(F.gamma.values(X, Y, Z) - cg)))
        du = float(np.max(np.abs(F.u.values(X, Y, Z) + X / Y)))
        check("beta", db, db < 1e-9)
        check("gamma", dg, dg < 1e-9)
        check("u", du, du < 1e-9)
        reps = {r.kind: r for r in firstterm_verify(GeneratingFunction(), FT)}
        for kind in ("toda", "system2.r1", "system2.r2"):
            check(kind, reps[kind].max_abs, reps[kind].max_abs < 1e-8)
        # the printed example is executed and its verdict reported, whatever it is
        ex = {r.kind: r for r in firstterm_verify(printed_example_gf(), FT)}
        t = ex["toda"]
        check("example.toda", t.max_abs, t.n_points > 0 and np.isfinite(t.max_abs))
        check("example.verdict", "pass" if t.max_abs < 1e-8 else "discrepancy", True)


def test_c07_secondstep():
    with criterion(7, "second step") as check:
        exact = np.array_equal(build_L(StateABC(2.0, 2.0, 0.0)), [[0, 1, 0], [0, 0, 1], [0.5, 2, 3]])
        check("L.printed", str(exact), exact)
        rng = np.random.default_rng(7)
        det_dev = tr_dev = 0.0
        for _ in range(20):
            s = StateABC(*rng.uniform(-3, 3, 3))
            L = build_L(s)
            det_dev = max(det_dev, abs(np.linalg.det(L) - 0.5))
            V = np.eye(3) + 0.3 * rng.standard_normal((3, 3))
            scale = max(1.0, float(np.max(np.abs(np.linalg.matrix_power(L, 4)))))
            tr_dev = max(tr_dev, trace_identity_check(V, L, 4) / scale)
        check("det", det_dev, det_dev < 1e-9)
        check("trace", tr_dev, tr_dev < 1e-9)
        kern = 0.0
        for _ in range(20):
            nodes = np.column_stack([rng.uniform(0.3, 2, 5), rng.uniform(0.3, 2, 5), rng.uniform(-1, 1, 5)])
            Q = build_Q(SpectralMeasure.from_nodes(nodes), rederived_F())
            a, b, c = rng.uniform(-0.5, 0.5, 3)
            scale = max(1.0, abs(float(Q(a, b, c))), abs(float(Q.d(2, 0, 0, a, b, c))))
            kern = max(kern, abs(float(q_equation1_residual(Q, a, b, c))) / scale)
        check("kernel", kern, kern < 1e-10)
        phi = lambda xi: np.exp(-0.3 * xi)
        drift = max(
            F_characteristic_solve(phi, k0, p0, s, F0=1.0)[3]
            for k0, p0, s in rng.uniform([0.5, 0.5, -0.8], [2, 2, 0.8], (10, 3))
        )
        check("k2/p.drift", drift, drift < 1e-12)
        K, P = np.meshgrid(np.linspace(0.5, 2, 9), np.linspace(0.5, 2, 9))
        printed = float(np.max(np.abs(F_pde_residual(printed_F(), K, P))))
        rederived = float(np.max(np.abs(F_pde_residual(rederived_F(), K, P))))
        passing = [n for n, v in (("printed", printed), ("rederived", rederived)) if v < 1e-8]
        check("F.printed", printed, True)
        check("F.rederived", rederived, True)
        check("F.passing", "+".join(passing) or "none", len(passing) == 1)


def test_c08_recurrence():
    with criterion(8, "recurrence chain") as check:
        g = Grid3.from_bounds([(0.5, 1.5, 9), (0.0, 0.6, 41), (0.2, 1.0, 9)])
        chain = alpha_chain(monge_field(linear_profile(), "A"), 1, g)
        Y = g.mesh()[1]
        a0 = float(np.nanmax(np.abs(chain.alpha(0) + np.log(1 - Y))))
        check("alpha0", a0, a0 < 1e-6)
        F = firstterm_fields(GeneratingFunction(polynomial_WL(2, 0.2), coeffs=REDERIVED_COEFFS))
        fg = Grid3.from_bounds([(1, 2, 17), (-2, -1, 17), (-0.5, 0.5, 17)])
        gam, y0 = F.gamma.values, fg.origin.y
        coh = truncation_coherence(F.u, fg, 1, {0: lambda x, z: gam(x, np.full_like(x, y0), z)})
        check("firstterm.residual", coh.max_abs, coh.passed)
        check("firstterm.threshold", 4 * coh.budget + 1e-10, True)
        mg = Grid3.from_bounds([(0.5, 1.5, 17), (-0.4, 0.4, 17), (0.2, 1.0, 17)])
        bad = truncation_coherence(monge_field(square_profile(), "A"), mg, 1)
        check("monge-u2.residual", bad.max_abs, (not bad.passed) and bad.max_abs > 1e-2)


def test_c09_linearization():
    with criterion(9, "translation symmetries S=u_x,u_y,u_z") as check:
        mg = Grid3.from_bounds([(0.6, 1.4, 7), (-0.3, 0.3, 7), (0.3, 0.9, 7)])
        mgb = Grid3.from_bounds([(-0.3, 0.3, 7), (0.6, 1.4, 7), (0.3, 0.9, 7)])
        fg = Grid3.from_bounds([(1.1, 1.9, 7), (-1.9, -1.1, 7), (-0.4, 0.4, 7)])
        wg = Grid3.from_bounds([(1.1, 1.9, 7), (-0.4, 0.4, 7), (-0.15, 0.15, 7)])
        sg = Grid3.from_bounds([(0.475, 0.505, 7), (0.755, 0.785, 7), (0.975, 1.005, 7)])
        maps = secondstep_XYZ(build_Q(characteristic_measure(), characteristic_line_F(1.0)))
        fields = {
            "monge-u-A": (monge_field(linear_profile(), "A"), mg),
            "monge-u-B": (monge_field(linear_profile(), "B"), mgb),
            "monge-u2": (monge_field(square_profile(), "A"), mg),
            "linfrac": (linear_fraction(0.2, 1.0, 0.7, -1.0, 1.3), mg),
            "liouville": (liouville(1.0), mg),
            "ward": (ward_field(ward_map(TWO_MODES), TWO_MODES), wg),
            "firstterm-closed": (firstterm_fields(GeneratingFunction()).u, fg),
            "firstterm-poly2": (
                firstterm_fields(GeneratingFunction(polynomial_WL(2, 0.2), coeffs=REDERIVED_COEFFS)).u,
                fg,
            ),
            "secondstep": (secondstep_fields(maps, S0).u, sg),
        }
        for name, (u, g) in fields.items():
            reps = run_checks(linearization_checks(u, CFG), g, CFG, name)
            worst = max(r.max_abs for r in reps)
            check(name, worst, worst < 1e-5 and all(r.n_skipped == 0 for r in reps))


DETERMINISM = {
    "monge-u2": SMOOTH["monge-u2"],
    "firstterm": "family = firstterm\n[firstterm]\nreading = rederived\nWL = poly:2:0.2\n"
    "[grid]\nx = 1:2:5\ny = -2:-1:5\nz = -0.5:0.5:5\n",
    "ward": "family = ward\n[grid]\nx = 1:2:5\ny = -0.5:0.5:5\nz = -0.2:0.2:5\n",
}


def test_c10_determinism(tmp_path):
    with criterion(10, "byte-identical verify/sample output") as check:
        for name, text in DETERMINISM.items():
            for cmd in ("verify", "sample"):
                outs = [_cli(tmp_path, name, text, cmd, "--threads", t)[1] for t in ("1", "1", "4")]
                same = outs[0] == outs[1] == outs[2] and len(outs[0]) > 0
                if cmd == "verify":
                    json.loads(outs[0])
                check(f"{name}.{cmd}", "identical" if same else "differs", same)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
