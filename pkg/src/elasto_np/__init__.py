"""Elastic Neumann-Poincaré spectra on spheres and anomalous localized resonance."""

__version__ = "0.1.0"
