"""Continued-fraction digit measures: Gauss measure, Markov approximations, dimension and f-expansions."""

__version__ = "0.1.0"
