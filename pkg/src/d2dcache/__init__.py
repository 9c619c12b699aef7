"""Delay-aware content placement for cellular networks with D2D links."""

__version__ = "0.1.0"
