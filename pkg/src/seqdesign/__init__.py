"""Binary +-1 sequence-set design for low integrated sidelobe level."""

__version__ = "0.1.0"

from .core import (
    CorrelationTable,
    SequenceFileError,
    SequenceSet,
    cross_correlation,
    isl,
    psl,
)
from .codegen import (
    GenerationError,
    GoldFamily,
    LfsrSpec,
    generate_gold_family,
    generate_mseq,
    gold_bound,
    random_set,
    sample_best_gold_subset,
)
from .miqp import (
    BnbConfig,
    MiqpSubproblem,
    SolveResult,
    SolverConfig,
    SolverError,
    build_subproblem,
    glover_link,
    lower_bound_interval,
    lower_bound_relaxation,
    solve_bnb,
    solve_exhaustive,
    solve_subproblem,
)
from .bcd import BcdConfig, RunTrace, is_local_optimum, run, select_subset

__all__ = [
    "BcdConfig",
    "BnbConfig",
    "CorrelationTable",
    "GenerationError",
    "GoldFamily",
    "LfsrSpec",
    "MiqpSubproblem",
    "RunTrace",
    "SequenceFileError",
    "SequenceSet",
    "SolveResult",
    "SolverConfig",
    "SolverError",
    "build_subproblem",
    "cross_correlation",
    "generate_gold_family",
    "generate_mseq",
    "glover_link",
    "gold_bound",
    "is_local_optimum",
    "isl",
    "lower_bound_interval",
    "lower_bound_relaxation",
    "psl",
    "random_set",
    "run",
    "sample_best_gold_subset",
    "select_subset",
    "solve_bnb",
    "solve_exhaustive",
    "solve_subproblem",
]
