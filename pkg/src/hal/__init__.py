"""Numerical toolkit for Morrey, Campanato and Hardy-space estimates, Riesz potentials,
Hodge decompositions and critical elliptic systems."""

__version__ = "0.1.0"
