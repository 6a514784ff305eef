"""Pyedde - diversity-driven neural network ensembles."""

__version__ = "1.0.0"
