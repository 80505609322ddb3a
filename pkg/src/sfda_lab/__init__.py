"""Desk-scale source-free domain adaptation lab."""

__version__ = "0.1.0"
