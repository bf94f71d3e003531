"""Multi-view orthogonal projection regression.

Variable selection across modalities with a known upstream-to-downstream
order: each downstream modality is split into the part explained by its
upstream modalities (a reduced-rank fit) and a residual, the residual parts
are projected away from the shared low-rank nuisance directions, and a
penalised path is solved on the de-correlated design.
"""

__version__ = "0.1.0"

from .numerics import CovarianceSpec, RngStream
from .rrr import RrrFit, fit_rrr, select_rank
from .projection import ModalityChain, TransformedDesign, build_transform, chain_residualize
from .penalized import (ConvergenceError, PenaltySpec, RegularizationPath, kkt_residual,
                        lambda_grid, solve_path)
from .methods import METHOD_NAMES, FittedModel, make_method
from .simulation import ScenarioConfig, builtin_scenario, simulate_scenario
from .evaluation import (SelectionReport, loo_evaluate, run_benchmark, selection_auc,
                         stability_summary)

__all__ = [
    "CovarianceSpec", "RngStream", "RrrFit", "fit_rrr", "select_rank", "ModalityChain",
    "TransformedDesign", "build_transform", "chain_residualize", "ConvergenceError",
    "PenaltySpec", "RegularizationPath", "kkt_residual", "lambda_grid", "solve_path",
    "METHOD_NAMES", "FittedModel", "make_method", "ScenarioConfig", "builtin_scenario",
    "simulate_scenario", "SelectionReport", "loo_evaluate", "run_benchmark",
    "selection_auc", "stability_summary",
]
