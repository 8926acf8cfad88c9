"""Numerically exact Jaynes-Cummings model simulator."""

__version__ = "0.1.0"
