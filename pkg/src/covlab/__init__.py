"""Finite covering experiments on graded groups."""

__version__ = "0.1.0"
