"""Transformer-based nonlinear equalization for coherent optical links."""

__version__ = "0.1.0"
