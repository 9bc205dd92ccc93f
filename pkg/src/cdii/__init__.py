"""Anisotropic conductivity reconstruction from internal current densities."""

from .cases import AnalyticCase, Diffeomorphism, constant_case, get_case, push_forward
from .conductivity import ConductivityField
from .errors import CdiiError, ContainerError, HypothesisError, SolverError
from .forward import (BoundaryCondition, MeasurementSet, SolverConfig, add_noise,
                      solve_conductivity, synthesize_measurements)
from .global_recon import assemble_elliptic_system, solve_global
from .grid import Box, Grid, MatrixField, ScalarField, TwoFormField, VectorField
from .hypotheses import check_hypotheses
from .kernels import BACKEND
from .recon import Anchor, joint_pipeline, reconstruct_gamma_tilde

__version__ = "0.1.0"

__all__ = [
    "AnalyticCase", "Diffeomorphism", "constant_case", "get_case", "push_forward",
    "ConductivityField", "CdiiError", "ContainerError", "HypothesisError", "SolverError",
    "BoundaryCondition", "MeasurementSet", "SolverConfig", "add_noise", "solve_conductivity",
    "synthesize_measurements", "assemble_elliptic_system", "solve_global",
    "Box", "Grid", "MatrixField", "ScalarField", "TwoFormField", "VectorField",
    "check_hypotheses", "BACKEND", "Anchor", "joint_pipeline", "reconstruct_gamma_tilde",
]
