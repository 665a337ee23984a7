"""Numerical companion for the twisted second moment of half-integral weight
L-functions and the critical-range bound for sums of products of Salie sums."""

__version__ = "0.1.0"
