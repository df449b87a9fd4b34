"""Solution families of the 1+2 continuous Toda chain and residual checks."""

__version__ = "0.1.0"
