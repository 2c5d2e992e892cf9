"""Boundary stability analysis for one-dimensional lattice Boltzmann schemes."""

__version__ = "0.1.0"
