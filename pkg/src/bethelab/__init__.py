"""Computational laboratory for Wronskian pairs and Bethe algebras of the
spin-1/2 XXX chain."""

__version__ = "0.1.0"
