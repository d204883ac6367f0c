"""Imbalanced flow-record classification: capped VAE augmentation, AE projection, cost-sensitive training."""

__version__ = "0.1.0"
