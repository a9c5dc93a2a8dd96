"""Analytic torsion and heat kernels on cones and flat orbifold models."""

__version__ = "0.1.0"
