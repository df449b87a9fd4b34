"""Exact families and what a residual report looks like.

The Monge field with F(u) = u is the linear fraction (x + z) / (1 - y); its
Toda residual is pure stencil error.  Refining the stencil step shows the
design order of the differences until round-off takes over.
"""

from todachain.families.closed import linear_fraction, liouville
from todachain.families.monge import linear_profile, monge_field, monge_verify, square_profile
from todachain.numcore import Grid3, Point3, StencilConfig
from todachain.residuals import convergence_order, residual_report, toda_residual

grid = Grid3.from_bounds([(0.5, 1.5, 11), (-0.4, 0.4, 11), (0.2, 1.0, 11)])

print("Toda residuals on an 11^3 grid")
for name, u in [
    ("monge F=u", monge_field(linear_profile(), "A")),
    ("linear fraction", linear_fraction(0.2, 1.0, 0.7, -1.0, 1.3)),
    ("liouville", liouville(1.0)),
]:
    r = residual_report(u, grid, family_name=name)
    print(f"  {name:16s} max {r.max_abs:.2e}  rms {r.rms:.2e}  worst at {tuple(round(v, 3) for v in r.worst_point)}")

print("\nMonge F=u^2 needs a root solve per point; the full bundle:")
u2 = monge_field(square_profile(), "A")
for r in monge_verify(square_profile(), "A", grid, field=u2):
    print(f"  {r.kind:13s} {r.max_abs:.2e}")
print(f"  mean Newton iterations {u2.func.mean_iterations:.1f}")

p = Point3(1.0, 0.1, 0.5)
for order in (2, 4):
    fn = lambda q, h, o=order: toda_residual(u2, q, StencilConfig(h=h, order=o))
    print(f"\norder-{order} stencil, observed order {convergence_order(fn, p, [0.08, 0.04, 0.02]):.3f}")
