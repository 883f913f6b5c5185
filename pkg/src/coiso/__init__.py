"""Chart-based coisotropic embedding engine."""

from .geom import (
    Chart, DiffBackend, ScalarField, VectorField, KForm, Bivector,
    wedge, exterior_derivative, interior_product, lie_bracket, jacobiator,
)
from .presympl import (
    PreSymplecticStructure, KernelFrame, kernel_basis,
    constant_rank_certificate, smooth_kernel_frame,
)
from .connection import Connection, CurvatureReport, validate, \
    horizontal_projector, curvature_decomposition, CLOSED, FLAT, CURVED
from .embedding import CoisotropicEmbedding, build, certify_closed, \
    certify_coisotropic, tubular_radius
from .poisson import PoissonStructure, invert, bracket, block_decompose, \
    projectability_check, project, anomaly
from .dynamics import HamiltonianSystem, Parametrization, \
    primary_constraints, stabilization_step, solve_dynamics

__version__ = "0.1.0"
