"""Numerical laboratory for the two-phase p-Bernoulli free boundary problem in the plane."""

__version__ = "0.1.0"
