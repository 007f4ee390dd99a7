"""Recompute, stress and evaluate SourceRank-style package trust scores."""

__version__ = "0.1.0"
