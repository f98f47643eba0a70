"""Tensor-bundle extraction from pretrained masked language models."""

__version__ = "0.1.0"
