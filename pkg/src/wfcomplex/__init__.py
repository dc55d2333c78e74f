"""Exact verification toolkit for the discrete elasticity complex on Worsey-Farin splits."""

__version__ = "0.1.0"
