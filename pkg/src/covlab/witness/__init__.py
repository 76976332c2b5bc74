"""Witness structures and their covering certificates."""
