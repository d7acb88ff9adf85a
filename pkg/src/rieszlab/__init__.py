"""Numerical laboratory for Riesz transforms, Clifford-Cauchy integrals and
harmonic measure estimates on rough boundaries."""

__version__ = "0.1.0"
