"""Divided-congruence lattices, their Hecke algebras and eigenform filtrations."""

__version__ = "0.1.0"
