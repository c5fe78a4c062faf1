"""Hybrid GHZ/B92 quantum key distribution simulator."""

__version__ = "0.1.0"
