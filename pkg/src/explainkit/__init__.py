"""Toolkit for explanation-augmented text-to-text pipelines."""

__version__ = "0.1.0"
