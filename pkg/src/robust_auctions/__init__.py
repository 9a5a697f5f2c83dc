"""Robustly optimal auctions with support information.

Construct, evaluate, and verify minimax lambda-regret mechanisms for n
i.i.d. bidders with valuations in [a, b], across four nested mechanism
classes (all DSIC, standard, SPA with random reserve, SPA with fixed or no
reserve), together with worst-case distributions, maximin-ratio tables,
and independent verification oracles.
"""

from .domain import (
    AuctionOutcome,
    GuGdMechanism,
    MechanismClass,
    PiecewiseCdf,
    ProblemInstance,
    SaddleSolution,
    cdf_eval,
    cdf_sample,
)
from .numerics import (
    DEFAULT_TOL,
    ToleranceConfig,
    find_root,
    integrate,
    iso_integral,
    iso_integral_mixed,
)
from .saddle import (
    RegimeConstants,
    minimax_value,
    optimal_all,
    optimal_spa_det,
    optimal_spa_rand,
    optimal_std,
    regime_constants,
    solve,
    worst_regret_spa_fixed,
)

__version__ = "0.1.0"

__all__ = [
    "AuctionOutcome", "GuGdMechanism", "MechanismClass", "PiecewiseCdf",
    "ProblemInstance", "SaddleSolution", "cdf_eval", "cdf_sample",
    "DEFAULT_TOL", "ToleranceConfig", "find_root", "integrate",
    "iso_integral", "iso_integral_mixed", "RegimeConstants", "minimax_value",
    "optimal_all", "optimal_spa_det", "optimal_spa_rand", "optimal_std",
    "regime_constants", "solve", "worst_regret_spa_fixed", "__version__",
]
