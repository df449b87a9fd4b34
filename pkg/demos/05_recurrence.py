"""The alpha chain: truncated series for symmetries of a given solution.

For u = (x + z)/(1 - y) the one-step chain is known in closed form.  The
truncation test separates a field admitting a one-term series (first-term
family, with gamma fixing the dy-integration constant) from one that does
not (Monge F(u) = u^2).
"""

import numpy as np

from todachain.families.firstterm import REDERIVED_COEFFS, GeneratingFunction, firstterm_fields, polynomial_WL
from todachain.families.monge import linear_profile, monge_field, square_profile
from todachain.numcore import Grid3
from todachain.recurrence import alpha_chain, truncation_coherence

g = Grid3.from_bounds([(0.5, 1.5, 9), (0.0, 0.6, 41), (0.2, 1.0, 9)])
chain = alpha_chain(monge_field(linear_profile(), "A"), 1, g)
err = np.nanmax(np.abs(chain.alpha(0) + np.log(1 - g.mesh()[1])))
print(f"alpha_0 vs -ln(1-y): {err:.1e}")

F = firstterm_fields(GeneratingFunction(polynomial_WL(2, 0.2), coeffs=REDERIVED_COEFFS))
fg = Grid3.from_bounds([(1, 2, 17), (-2, -1, 17), (-0.5, 0.5, 17)])
y0 = fg.origin.y
coh = truncation_coherence(F.u, fg, 1, {0: lambda x, z: F.gamma.values(x, np.full_like(x, y0), z)})
print(f"first-term: residual {coh.max_abs:.2e}, budget {coh.budget:.2e}, passed {coh.passed}")

mg = Grid3.from_bounds([(0.5, 1.5, 17), (-0.4, 0.4, 17), (0.2, 1.0, 17)])
bad = truncation_coherence(monge_field(square_profile(), "A"), mg, 1)
print(f"Monge F=u^2: residual {bad.max_abs:.2f}, passed {bad.passed}")
