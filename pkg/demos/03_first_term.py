"""First-term family: a generating function W(beta, gamma; y) and its field.

With W_L = 0 the family collapses to u = -x/y.  A polynomial mode of the
re-derived linear equation gives a genuinely new solution.  The printed
example W_L = 2 exp(-beta) is run as well; its residual is reported, not
hidden.
"""

from todachain.families.firstterm import (
    REDERIVED_COEFFS,
    GeneratingFunction,
    firstterm_verify,
    polynomial_WL,
    printed_example_gf,
)
from todachain.numcore import Grid3

grid = Grid3.from_bounds([(1, 2, 9), (-2, -1, 9), (-0.5, 0.5, 9)])
cases = {
    "W_L = 0": GeneratingFunction(),
    "0.2 e^{-2b}(g^2 + 1/2)": GeneratingFunction(polynomial_WL(2, 0.2), coeffs=REDERIVED_COEFFS),
    "printed example": printed_example_gf(),
}
for name, gf in cases.items():
    reps = {r.kind: r.max_abs for r in firstterm_verify(gf, grid)}
    print(f"{name:24s} toda {reps['toda']:.2e}  system2 {max(reps['system2.r1'], reps['system2.r2']):.2e}  constraint {reps['constraint']:.1e}")
