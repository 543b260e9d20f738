"""Radar micro-Doppler hand-gesture classification toolkit."""

__version__ = "0.1.0"
