"""Exact computation with commuting pairs of p-adic power series."""
