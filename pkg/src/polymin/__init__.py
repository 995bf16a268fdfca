"""Search, evaluation and certification of minimum-quotient polyhedra with n vertices."""

__version__ = "0.1.0"
