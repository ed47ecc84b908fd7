"""Chance-constrained robust portfolio optimization on the long-only simplex."""

__version__ = "0.1.0"

from .analysis import (
    DissimilarityMatrix,
    Frontier,
    FrontierPoint,
    dissimilarity_matrix,
    monte_carlo_validate,
    parse_tau_grid,
    sweep_frontier,
)
from .models import (
    NOMINAL,
    ROBUST_EXPONENTIAL,
    ROBUST_NORMAL,
    ExponentialPerturbation,
    NormalPerturbation,
    PerturbationSpec,
    PortfolioModel,
    constraint_slack,
    feasible_return_range,
    objective,
)
from .solver import Solution, SolverConfig, Status, grid_oracle, project_to_simplex, solve
from .stats_ingest import (
    PriceSeries,
    ReturnMatrix,
    ReturnStatistics,
    compute_returns,
    estimate_statistics,
    load_prices,
)
