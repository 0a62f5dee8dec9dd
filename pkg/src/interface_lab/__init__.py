"""Numerical laboratory for interface dynamics in singularly perturbed
semilinear wave equations around timelike minimal surfaces."""

__version__ = "0.1.0"
