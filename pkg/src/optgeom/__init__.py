"""Optical structures on Lorentzian metrics."""

__version__ = "0.1.0"
