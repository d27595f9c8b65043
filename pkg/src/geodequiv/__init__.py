"""Symbolic verification of geodesically equivalent metrics with equal stress-energy tensors."""

__version__ = "0.1.0"
