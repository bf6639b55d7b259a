"""Cell-average particle approximation of 2D initial data and error-bound verification."""

from .bounds import BoundInputs, BoundReport, theorem_bound
from .discretize import (
    Grid,
    PiecewiseConstantField,
    build_density_approx,
    build_quantity_approx,
    cell_averages,
    make_grid,
    weak_error_density,
    weak_error_quantity,
)
from .fields import BoxDomain, NormData, ScalarField
from .harness import StudyCase, estimate_order, run_study, verify_bounds
from .quadrature import QuadratureSpec, integrate_box
from .truncation import TruncationResult, find_truncation_L

__all__ = [
    "BoundInputs",
    "BoundReport",
    "BoxDomain",
    "Grid",
    "NormData",
    "PiecewiseConstantField",
    "QuadratureSpec",
    "ScalarField",
    "StudyCase",
    "TruncationResult",
    "build_density_approx",
    "build_quantity_approx",
    "cell_averages",
    "estimate_order",
    "find_truncation_L",
    "integrate_box",
    "make_grid",
    "run_study",
    "theorem_bound",
    "verify_bounds",
    "weak_error_density",
    "weak_error_quantity",
]
