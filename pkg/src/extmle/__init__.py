"""Extended maximum likelihood estimation for log-linear models."""

__version__ = "0.1.0"
