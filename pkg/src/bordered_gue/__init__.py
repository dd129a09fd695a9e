"""Singly and multiply bordered GUE matrices: sampling, exact kernels and edge limits."""

__version__ = "0.1.0"
