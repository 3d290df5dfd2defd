"""Latent structured ranking: training and inference engine."""

__version__ = "1.0.0"
