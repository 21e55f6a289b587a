"""Robustness-of-incompatibility measures for finite-dimensional quantum devices."""

from .backend import BACKEND

__all__ = ["BACKEND"]
__version__ = "0.1.0"
