"""Koopman spectral toolkit for benchmark dynamical systems."""

from .checks import run_all_checks
from .dictionaries import (
    build_indicator_augmented,
    build_monomial_dictionary,
    build_rbf_dictionary,
    eval_dictionary,
    eval_dictionary_gradient,
)
from .fields import VectorFieldSpec, eval_vector_field, make_system, registered_systems
from .integrate import active_backend, available_backends, flow, flow_batch, flow_path
from .koopman import (
    compose_eigenpairs,
    discretize_spectrum,
    eig,
    eval_eigenfunction,
    fit_edmd,
    fit_generator_edmd,
    residual,
)
from .systems import (
    basin_grid,
    classify_basin,
    find_fixed_points,
    sample_snapshot_pairs,
    simulate_trajectory,
)

__all__ = [
    "VectorFieldSpec",
    "active_backend",
    "available_backends",
    "basin_grid",
    "build_indicator_augmented",
    "build_monomial_dictionary",
    "build_rbf_dictionary",
    "classify_basin",
    "compose_eigenpairs",
    "discretize_spectrum",
    "eig",
    "eval_dictionary",
    "eval_dictionary_gradient",
    "eval_eigenfunction",
    "eval_vector_field",
    "find_fixed_points",
    "fit_edmd",
    "fit_generator_edmd",
    "flow",
    "flow_batch",
    "flow_path",
    "make_system",
    "registered_systems",
    "residual",
    "run_all_checks",
    "sample_snapshot_pairs",
    "simulate_trajectory",
]

__version__ = "0.1.0"
