"""Desk-scale numerics for disordered free-fermion topological phases."""

__version__ = "0.1.0"
