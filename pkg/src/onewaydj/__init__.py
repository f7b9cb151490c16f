"""Deterministic one-way Deutsch-Jozsa on a star graph state, with an NMR-ensemble model."""

__version__ = "0.1.0"
