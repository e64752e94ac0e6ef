"""Alternating gradient descent ascent for minimax problems under the
two-sided Polyak-Lojasiewicz condition."""
from ._kernels import BACKEND
from .core import (
    Iterate,
    SolverConfig,
    StepSchedule,
    TraceRecord,
    preset_agda_theoretical,
    preset_stoc_diminishing,
    preset_vr_agda,
    schedule_at,
)
from .problems import (
    MinimaxProblem,
    RlsDataset,
    gen_rls_dataset,
    make_logistic_bilinear,
    make_rls,
    make_toy,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "Iterate",
    "SolverConfig",
    "StepSchedule",
    "TraceRecord",
    "preset_agda_theoretical",
    "preset_stoc_diminishing",
    "preset_vr_agda",
    "schedule_at",
    "MinimaxProblem",
    "RlsDataset",
    "gen_rls_dataset",
    "make_logistic_bilinear",
    "make_rls",
    "make_toy",
]
