"""Closed-form exact solutions used as references.

``linear_fraction``: ``u = (a1 x + a3 z + a0) / (a4 y + a5)``.  Both
``(ln u)_xy`` and ``u_zz`` vanish identically.

``liouville``: ``u = (z^2 + c) e^{x+y} / (e^x + e^y)^2``.  Here
``(ln u)_xy = 2 e^{x+y} / (e^x + e^y)^2 = u_zz``; the x-y part is not
polynomial, so finite differences carry a genuine truncation error, while
the quadratic z-dependence makes the discrete chain exact.
"""

from __future__ import annotations

import numpy as np

from ..numcore import ScalarField3

__all__ = ["linear_fraction", "liouville"]


def linear_fraction(a0=0.0, a1=1.0, a3=1.0, a4=-1.0, a5=1.0) -> ScalarField3:
    def func(x, y, z):
        return (a1 * x + a3 * z + a0) / (a4 * y + a5)

    def domain(x, y, z):
        return func(x, y, z) > 0

    return ScalarField3(func, domain, name=f"linear_fraction[{a0},{a1},{a3},{a4},{a5}]")


def liouville(c: float = 1.0) -> ScalarField3:
    if not c > 0:
        raise ValueError("c must be positive")

    def func(x, y, z):
        x, y, z = (np.asarray(v, dtype=float) for v in (x, y, z))
        # e^{x+y}/(e^x+e^y)^2 = 1 / (4 cosh^2((x-y)/2))
        return (z * z + c) / (4.0 * np.cosh(0.5 * (x - y)) ** 2)

    return ScalarField3(func, name=f"liouville[c={c}]")
