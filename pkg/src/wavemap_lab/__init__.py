"""Numerical laboratory for 1-equivariant wave maps exterior to the unit ball."""

__version__ = "0.1.0"
