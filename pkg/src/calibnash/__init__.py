"""Calibrated forecasting on a simplex grid and its use for approximate Nash equilibria."""

from .calibration import (
    BiasLedger,
    EmpiricalAverageForecaster,
    FixedPointForecaster,
    fixed_point_forecast,
    make_adversary,
    make_forecaster,
    run_calibration,
    strong_rate,
    weak_rate,
)
from .games import (
    BimatrixGame,
    SmoothBRConfig,
    StrategyProfile,
    best_response,
    generate_game,
    ne_gap,
    payoff,
    smooth_best_response,
)
from .io import load_game, save_game
from .reduction import Certificate, ReductionConfig, estimate_fixed_point_residual, run_reduction
from .simplex import l1_distance, marginals, outer, project_l2, simplex_point
from .triangulation import GridTriangulation

__version__ = "0.1.0"

__all__ = [
    "BiasLedger",
    "BimatrixGame",
    "Certificate",
    "EmpiricalAverageForecaster",
    "FixedPointForecaster",
    "GridTriangulation",
    "ReductionConfig",
    "SmoothBRConfig",
    "StrategyProfile",
    "best_response",
    "estimate_fixed_point_residual",
    "fixed_point_forecast",
    "generate_game",
    "l1_distance",
    "load_game",
    "make_adversary",
    "make_forecaster",
    "marginals",
    "ne_gap",
    "outer",
    "payoff",
    "project_l2",
    "run_calibration",
    "run_reduction",
    "save_game",
    "simplex_point",
    "smooth_best_response",
    "strong_rate",
    "weak_rate",
]
