"""Lattice protein folding as binary optimization.

Three encodings of a chain on the cubic (or square) lattice as pseudo-Boolean
polynomials, a quadratization pass, exact and sampling solvers, and the
success-probability statistics used to score annealing runs.
"""

__version__ = "0.1.0"
