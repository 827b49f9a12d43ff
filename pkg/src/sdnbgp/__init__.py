"""Analytic and simulated BGP convergence under partial routing centralization."""
__version__ = "0.1.0"
