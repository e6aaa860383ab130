"""Discontinuous Galerkin spectral-element solver for linear elastodynamics
in velocity-stress form, truncated by a stabilized perfectly matched layer."""

__version__ = "0.1.0"
