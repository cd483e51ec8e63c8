"""Kronecker-structured dictionary learning: bounds, packing constructions, and estimators."""
