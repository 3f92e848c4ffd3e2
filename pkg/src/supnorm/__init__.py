"""Numerical toolkit for sup-norm bounds of holomorphic forms on compact
quaternionic quotients: order arithmetic, Bergman kernel sums, lattice
point counts and the amplifier exponent ledger."""

__version__ = "0.1.0"
