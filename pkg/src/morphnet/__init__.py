"""Modular recurrent-network experiments in receptive morphology."""

__version__ = "0.1.0"
