"""Pseudospectral simulator for Dirac fields coupled to a particle."""

__version__ = "0.1.0"
