"""Weakly supervised and unsupervised car localization with class activation maps."""

__version__ = "1.0.0"
