"""Flipping-error-reduction training lab."""

__version__ = "0.1.0"
