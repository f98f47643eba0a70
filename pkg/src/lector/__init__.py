"""Slide-topic relationship scoring and reading-log analytics."""

__version__ = "0.1.0"
