"""Finite-time resilient consensus: simulation, robustness analysis, trajectory verification."""
__version__ = "0.1.0"
