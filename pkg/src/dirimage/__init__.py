"""Numerical curvature laboratory for direct images on torus families."""

__version__ = "0.1.0"
