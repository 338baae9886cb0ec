"""Infer the correlation between a hidden rating and an observed score from winners' ranks."""

__version__ = "0.1.0"
