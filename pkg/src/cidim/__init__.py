"""Common information dimension of jointly Gaussian vectors."""

__version__ = "0.1.0"
