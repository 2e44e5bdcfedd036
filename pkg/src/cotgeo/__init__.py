"""Geometric structures on the cotangent bundle, in local coordinates."""

__version__ = "0.1.0"
