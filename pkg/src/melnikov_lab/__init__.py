"""melnikov_lab: obstruction integrals and Melnikov functions for perturbed ODEs."""

__version__ = "0.1.0"
