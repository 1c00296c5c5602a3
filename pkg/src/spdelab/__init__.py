"""Spectral laboratory for semilinear stochastic heat equations on (0, 1)."""

__version__ = "0.1.0"
