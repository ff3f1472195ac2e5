"""Semilattice-graded many-body Hamiltonians at desk scale."""

__version__ = "0.1.0"
