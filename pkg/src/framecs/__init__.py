"""Multilevel compressed sensing with tight frames."""

__version__ = "0.1.0"
