"""Numerical Tauberian analysis of heavy-tailed distributions via Laplace-Stieltjes transforms."""

__version__ = "0.1.0"
