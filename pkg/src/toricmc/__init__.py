"""Toric statistical models: A-models, their lattices and closures, design
moments, toric Markov chains and reversible kernels."""

from .amodel import AModel, Binomial, Density, binomial_model, closure_model, confounded, density, face_submodel
from .design import Design, Poly, design_of, indicator_poly, moment, monomial_basis
from .errors import EnumerationBudgetExceeded, InputError, NegativeResult, NotReversible, ToricError
from .lattice import graver_basis, hermite_normal_form, hilbert_basis_of_span, integer_kernel_basis
from .markov import TmcParam, TransitionGraph, expected_counts, partition_function, transition_count
from .reversible import (
    ReversibleParam,
    cocycle_matrix,
    detailed_balance_solve,
    enumerate_cycles,
    kolmogorov_check,
    metropolis_reversible,
    params_from_reversible,
    reversible_from_params,
)

__version__ = "0.1.0"

__all__ = [
    "AModel",
    "Binomial",
    "Density",
    "Design",
    "EnumerationBudgetExceeded",
    "InputError",
    "NegativeResult",
    "NotReversible",
    "Poly",
    "ReversibleParam",
    "TmcParam",
    "ToricError",
    "TransitionGraph",
    "binomial_model",
    "closure_model",
    "cocycle_matrix",
    "confounded",
    "density",
    "design_of",
    "detailed_balance_solve",
    "enumerate_cycles",
    "expected_counts",
    "face_submodel",
    "graver_basis",
    "hermite_normal_form",
    "hilbert_basis_of_span",
    "indicator_poly",
    "integer_kernel_basis",
    "kolmogorov_check",
    "metropolis_reversible",
    "moment",
    "monomial_basis",
    "params_from_reversible",
    "partition_function",
    "reversible_from_params",
    "transition_count",
]
