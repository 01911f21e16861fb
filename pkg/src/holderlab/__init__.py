"""Spectral toolkit for Fourier multipliers acting on functions with partial Hölder regularity."""

__version__ = "0.1.0"
