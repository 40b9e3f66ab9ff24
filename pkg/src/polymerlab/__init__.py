"""Numerical laboratory for the critical two-dimensional directed polymer and the 2d stochastic heat equation."""

__version__ = "0.1.0"
