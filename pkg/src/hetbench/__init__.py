"""Deterministic benchmark of five classifiers on synthetic heterogeneous micropore data."""

__version__ = "0.1.0"
