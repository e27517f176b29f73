"""Pyramid-adapted shearlet frames and sparse-approximation benchmarks."""

__version__ = "0.1.0"
