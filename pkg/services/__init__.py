"""Numerical library: systems, Toeplitz structure, STLN and the radius pipeline."""
