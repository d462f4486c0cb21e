"""Robust asymptotic growth rates, optimal strategies and their checks.

A market model is a covariance field ``c`` and an invariant density ``p``
on an interval, a box or the open simplex. The package computes the
largest growth rate that a single strategy guarantees across every
diffusion sharing ``(c, p)``, the strategy attaining it, and Monte Carlo
checks of both.
"""

from .analytic import (
    GeneratingFunction,
    GrowthReport,
    candidate_growth,
    classify,
    solve_gradient_case,
    solve_one_dim,
)
from .config import load_config, preset_names
from .domain import Box, Interval, Simplex
from .errors import (
    AllPathsExploded,
    AssumptionViolated,
    BadParams,
    NoConvergence,
    NotDivergenceFree,
    NotGradientCase,
    NotInDomainD,
    NumericalError,
    RobustGrowthError,
    TieDerivative,
    ValidationError,
)
from .fields import CovarianceField, ScalarField, VectorField
from .model import Diagnostics, MarketModel, check_assumptions, model_from_config
from .rank import (
    CutoffSpec,
    RankInputs,
    ThetaParams,
    modify,
    order,
    rank_pipeline,
    symmetrize,
    theta,
)
from .simulate import (
    SdeSpec,
    occupancy,
    perturbed_drift,
    reversing_drift,
    simulate,
    wealth,
    worst_case_drift,
)
from .variational import refinement_study, solve_phi, solve_variational

__version__ = "0.1.0"
