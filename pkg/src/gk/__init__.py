"""Exact checks for I-functions of projectivised split bundles."""

__version__ = "0.1.0"
