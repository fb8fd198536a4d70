"""Finite-dimensional recovery maps, entropies and trace-inequality checks."""

__version__ = "0.1.0"
