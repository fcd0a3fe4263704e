"""Numerical laboratory for the resonance method applied to several L-functions at once."""

__version__ = "0.1.0"
