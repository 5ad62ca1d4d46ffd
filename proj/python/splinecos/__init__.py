"""Bayesian spatial models with change of support."""

from ._core import (
    __version__,
    basis_integrals,
    basis_values,
    design_matrix,
    diagnose,
    fit,
    predict,
    read_chains,
    simulate,
)

__all__ = [
    "basis_integrals",
    "basis_values",
    "design_matrix",
    "diagnose",
    "fit",
    "predict",
    "read_chains",
    "simulate",
]
