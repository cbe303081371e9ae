"""Evolutionary market simulator: replicator dynamics of products and firms,
life-cycle macro dynamics, and the fitting tools used to analyse them."""

__version__ = "0.1.0"
