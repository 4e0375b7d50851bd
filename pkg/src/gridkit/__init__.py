"""Gridding reconstruction with optimized density compensation."""

__version__ = "0.1.0"
