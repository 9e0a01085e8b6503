"""Finite certificates for class-2 p-groups, bilinear structures, and their axioms."""

__version__ = "0.1.0"
