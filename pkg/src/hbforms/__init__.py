"""Hierarchical B-spline discrete differential forms in two dimensions."""

__version__ = "0.1.0"
