"""Finite-depth configuration-avoiding sets via landmark systems."""
__version__ = "0.1.0"
