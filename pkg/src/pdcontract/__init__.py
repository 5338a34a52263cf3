"""Contraction analysis and simulation of primal-dual dynamics."""

__version__ = "0.1.0"
