"""Decomposition of block-angular LPs with accuracy certificates."""

__version__ = "0.1.0"
