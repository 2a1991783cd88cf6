"""Fuzzy numbers by alpha-level bands, compactness diagnostics, and a solver
for fuzzy integral equations with the Abel kernel ``(t - s)^(q-1)``."""

from .analysis import (
    CompactnessReport,
    FamilySample,
    compactness_verdict,
    equicontinuity_modulus,
    family_bound,
)
from .fuzzy import (
    FuzzyNumber,
    Interval,
    add,
    crisp,
    embed_j,
    interval_hausdorff,
    level_at,
    metric_D,
    scale,
    triangular,
    validate,
    zero,
)
from .quadrature import FuzzyTrajectory, TimeGrid, fuzzy_integral, gamma_fn, product_trapezoid_weights
from .solver import ProblemSpec, RhsSpec, SolveReport, compute_eta, compute_N, estimate_M, picard_solve

__version__ = "0.1.0"
