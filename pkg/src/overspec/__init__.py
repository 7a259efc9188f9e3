"""Desk-scale laboratory for structural overspecification in
representation-selection pipelines: a small pipeline language with a
working recursion theorem, bounded detection, repair fixed points and
benchmark aggregation."""

__version__ = "0.1.0"
