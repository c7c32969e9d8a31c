"""Measurement-based computation in the 2D cluster phase, simulated at desk scale."""

__version__ = "0.1.0"
