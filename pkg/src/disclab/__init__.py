"""Discrepancy and Fourier-decay laboratory for convex bodies."""
__version__ = "0.1.0"
