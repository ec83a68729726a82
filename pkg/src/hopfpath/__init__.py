"""Exact-arithmetic combinatorial Hopf algebras, rough-path lifts, and rough ODEs."""

__version__ = "0.1.0"
