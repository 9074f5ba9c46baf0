"""Scrambling diagnostics for small open quantum systems."""

__version__ = "0.1.0"
