"""Quantum-kernel and classical SVC workflow for ligand-based virtual screening."""

__version__ = "0.1.0"
