"""Robust matrix completion by alternating thresholding and singular value projection."""

from .linalg import (
    IncoherenceReport,
    Norms,
    SvdFactors,
    incoherence,
    norms,
    rank_r_project,
    spectral_norm,
    truncated_svd,
)
from .problem import (
    GroundTruth,
    ObservationSet,
    SparsityStats,
    check_assumptions,
    gen_ground_truth,
    inject_outliers,
    make_instance,
    sample_mask,
)
from .solver import BetaMode, SolverConfig, SolveTrace, Termination, beta_data_driven, solve, solve_rrmc
from .thresholding import ThresholdKind, apply_scalar, verify_properties

__version__ = "0.1.0"
