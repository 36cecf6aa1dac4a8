"""Assumption-free lower confidence bounds for the l1-norm of coefficient groups."""

from ._backend import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
