"""Spline best approximations with Gibbs constraints.

Open B-spline spaces in one and two dimensions, L2 / H0^1 / interior-penalty
best approximations, Gibbs functionals on subdomains, and a constrained
solver that suppresses over- and undershoots near sharp layers.
"""
from .gibbs import (
    ConstraintOperator,
    GibbsEvaluation,
    SubdomainPartition,
    build_partition,
    evaluate,
    gibbs_1d,
    gibbs_nd,
    total_variation,
)
from .projectors import InnerProduct, ProjectionProblem, assemble, project
from .solver import ConstrainedProblem, ConstrainedSolution, feasibility_probe, solve_constrained
from .spline_space import DofFunction, SplineSpace, make_space
from .targets import TanhLayer, tanh_1d, tanh_2d

__version__ = "0.1.0"

__all__ = [
    "ConstraintOperator",
    "GibbsEvaluation",
    "SubdomainPartition",
    "build_partition",
    "evaluate",
    "gibbs_1d",
    "gibbs_nd",
    "total_variation",
    "InnerProduct",
    "ProjectionProblem",
    "assemble",
    "project",
    "ConstrainedProblem",
    "ConstrainedSolution",
    "feasibility_probe",
    "solve_constrained",
    "DofFunction",
    "SplineSpace",
    "make_space",
    "TanhLayer",
    "tanh_1d",
    "tanh_2d",
]
