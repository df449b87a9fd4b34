"""Second step: spectral superposition of exponentials into a potential Q.

Two closed forms for the spectral weight are compared against its
first-order PDE.  The weight concentrated on the characteristic
k^2/p = -2m then yields a Q whose maps x, y, z are inverted by Newton.
"""

import numpy as np

from todachain.families.secondstep import (
    StateABC,
    build_L,
    build_Q,
    characteristic_line_F,
    characteristic_measure,
    F_pde_residual,
    printed_F,
    q_equation2_residual,
    rederived_F,
    secondstep_verify,
    secondstep_XYZ,
)
from todachain.numcore import Grid3

print("L at (a, b, c) = (2, 2, 0):\n", build_L(StateABC(2.0, 2.0, 0.0)))

K, P = np.meshgrid(np.linspace(0.5, 2, 9), np.linspace(0.5, 2, 9))
for name, form in (("printed", printed_F()), ("re-derived", rederived_F())):
    print(f"weight PDE residual, {name:10s} form: {np.max(np.abs(F_pde_residual(form, K, P))):.2e}")

maps = secondstep_XYZ(build_Q(characteristic_measure(), characteristic_line_F(1.0)))
pts = (np.array([0.2, 0.4]), np.array([0.3, 0.1]), np.array([0.1, -0.1]))
rel = np.max(np.abs(q_equation2_residual(maps.Q, *pts))) / np.max(np.abs(maps.Q(*pts)))
print(f"second Q equation, relative residual on the characteristic measure: {rel:.1e}")

grid = Grid3.from_bounds([(0.47, 0.51, 7), (0.75, 0.79, 7), (0.97, 1.01, 7)])
for r in secondstep_verify(maps, grid, StateABC(0.2, 0.3, 0.1)):
    print(f"  {r.kind:11s} {r.max_abs:.2e}")
