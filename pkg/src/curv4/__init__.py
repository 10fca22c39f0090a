"""Curvature of 4-dimensional Riemannian metrics given by chart expressions.

Symbolic metric entries are differentiated to 2-jets, turned into the
curvature operator on 2-forms, split into self-dual and anti-self-dual
blocks, and used to locate the extremes of the biorthogonal curvature.
"""

from .errors import Curv4Error

__version__ = "0.1.0"

__all__ = ["Curv4Error", "__version__"]
