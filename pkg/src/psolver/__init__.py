"""Integrating factors and first integrals of first-order rational ODEs."""

__version__ = "0.1.0"
