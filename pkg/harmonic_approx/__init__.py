"""Harmonicity modulus, Pizzetti smoothing and polyharmonic Jackson approximation."""

__version__ = "1.0.0"
