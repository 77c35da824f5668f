"""Frontier of planar random walk: simulation, geometry, measures and scaling experiments."""

__version__ = "0.1.0"
