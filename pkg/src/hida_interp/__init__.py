"""Exact and p-adic checks comparing two interpolation formulas for ordinary modular forms."""

__version__ = "0.1.0"
