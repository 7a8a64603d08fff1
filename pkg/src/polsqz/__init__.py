"""Polarization switching and squeezing in a cavity with four-level atoms."""

__version__ = "0.1.0"
