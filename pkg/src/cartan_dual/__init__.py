"""Exterior calculus for Riemann-Cartan geometry and gravitational duality checks."""

__version__ = "0.1.0"
