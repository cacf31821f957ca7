"""Implicit optimistic online learning and min-max optimization on Hadamard manifolds."""

from .constraints import GeodesicBall, PowerBall, ProductSet, WholeManifold
from .estimators import KarcherMean, RobustKarcherMean
from .exceptions import (
    GeometryDomainError,
    HadamardError,
    NumericError,
    SubsolverBudgetError,
    UnsupportedGeometryError,
)
from .geometry import CurvatureBounds, Manifold, delta, geometric_constants, zeta
from .karcher import ExperimentConfig, KarcherInstance, generate_instance, karcher_mean, robust_karcher_oracle, run_experiment
from .manifolds import SPD, Euclidean, Hyperbolic, PowerManifold, ProductManifold, manifold_from_spec
from .objectives import (
    BilinearSaddle,
    BusemannFunction,
    FunctionObjective,
    FunctionSaddle,
    SaddleOracle,
    SeparableSaddle,
    SquaredDistance,
    ZeroObjective,
)
from .riod import RiodConfig, precision_riod, regret, regret_bound, riod_run
from .rioda import MinMaxConfig, duality_gap, iterate_radius_audit, precision_rioda, rioda_run
from .subsolvers import ProxSubproblem, StoppingRule, crgd, prgd, rgd, solve_prox_certified, solve_prox_fixed

__version__ = "0.1.0"
