"""Retrieval-augmented adaptive machine translation engine."""

__version__ = "0.1.0"
