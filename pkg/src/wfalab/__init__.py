"""Verification lab for the work function algorithm on the k-server problem."""

__version__ = "0.1.0"
