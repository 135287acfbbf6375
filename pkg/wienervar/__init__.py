"""Variational representations on Wiener space: estimators, drift control and Brascamp–Lieb checks."""

__version__ = "1.0.0"
