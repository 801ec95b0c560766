"""Transcript transformation pipeline with surface-form and semantic analysis."""

__version__ = "0.1.0"
