"""Cusp excursions and theta norms on products of SL2."""

__version__ = "0.1.0"
