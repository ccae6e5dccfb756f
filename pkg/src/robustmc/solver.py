"""Alternating thresholding / singular value projection for robust completion.

Starting from L^0 = 0, iteration t computes

    xi_t    = beta * gamma**t
    S^t     = T_{xi_t}(P_Omega(M - L^t))
    L^{t+1} = P_r(L^t - P_Omega(L^t + S^t - M) / p)

where T is a thresholding function and P_r the best rank-r approximation.
With hard thresholding and the same threshold schedule this is the R-RMC
baseline.
"""

import enum
import logging
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError, ParameterError
from .linalg import truncated_svd
from .thresholding import ThresholdKind, apply

log = logging.getLogger(__name__)

CHANGE_FLOOR = 1e-30


class BetaMode(enum.Enum):
    ORACLE = "oracle"
    DATA_DRIVEN = "data"


class Termination(enum.Enum):
    CONVERGED = "converged"
    MAX_ITERS = "max_iters"
    FAILED = "failed"


@dataclass(frozen=True)
class SolverConfig:
    rank_r: int
    kind: ThresholdKind = field(default_factory=ThresholdKind.soft)
    beta: float = None
    gamma: float = 0.9
    max_iters: int = 500
    stop_tol: float = 1e-9
    beta_mode: BetaMode = BetaMode.ORACLE
    beta_factor: float = 1.1
    svd_method: str = "auto"
    svd_seed: int = 0

    def __post_init__(self):
        if self.rank_r < 1:
            raise ParameterError("rank must be positive")
        if not 0 < self.gamma < 1:
            raise ParameterError(f"gamma must lie in (0, 1), got {self.gamma}")
        if self.beta is not None and not self.beta > 0:
            raise ParameterError(f"beta must be positive, got {self.beta}")
        if self.max_iters < 1 or not self.stop_tol > 0:
            raise ParameterError("max_iters and stop_tol must be positive")


@dataclass
class IterateState:
    t: int
    l_t: np.ndarray
    xi_t: float
    s_t: object = None


@dataclass(frozen=True)
class IterRecord:
    t: int
    xi: float
    successive_change: float
    support_size: int
    wall_ms: int
    inf_error: float = None
    rel_inf_error: float = None
    support_in_truth: bool = None
    outlier_inf_error: float = None


@dataclass
class SolveTrace:
    records: list
    l_hat: np.ndarray
    s_hat: object
    termination: Termination
    beta: float
    error: str = None

    @property
    def iterations(self):
        """Number of low-rank updates performed (records hold t = 0..iterations)."""
        return len(self.records) - 1

    @property
    def converged(self):
        return self.termination is Termination.CONVERGED

    @property
    def converged_at(self):
        """Index t of the iterate the run settled on, or None if it did not converge.

        Convergence is only detectable one update later, so this is
        ``iterations - 1`` (p = 1, alpha = 0 settles at t = 1, detected at t = 2).
        """
        return self.iterations - 1 if self.converged else None

    @property
    def final_rel_inf_error(self):
        return self.records[-1].rel_inf_error if self.records else None


def s_update(state, obs, kind):
    """Outlier estimate T_xi(P_Omega(M - L^t)) on the observed index set."""
    if not state.xi_t > 0:
        raise ParameterError("threshold must be positive")
    resid = obs.values - state.l_t.ravel()[obs.linear_index]
    return obs.with_values(apply(kind, state.xi_t, resid))


def l_update(state, s_new, obs, rank, p, svd_method="auto", svd_seed=0):
    """Rank-``rank`` projection of L^t - P_Omega(L^t + S^t - M) / p."""
    lin = obs.linear_index
    arg = state.l_t.copy()
    flat = arg.ravel()
    flat[lin] -= (flat[lin] + s_new.values - obs.values) / p
    return truncated_svd(arg, rank, method=svd_method, seed=svd_seed).reconstruct()


def beta_data_driven(obs, rank_r):
    """Heuristic threshold scale (mu_hat r / n) * sigma_hat_1.

    Both estimates come from the rank-r SVD of P_Omega(M) / p. Returns 0 for
    all-zero observations.
    """
    y = obs.to_dense() / obs.sample_rate_p
    if not np.any(y):
        return 0.0
    f = truncated_svd(y, rank_r)
    if f.sigma[0] == 0:
        return 0.0
    row_u = np.max(np.sum(f.u**2, axis=1))
    row_v = np.max(np.sum(f.v**2, axis=1))
    # (mu r / n) sigma_1 with mu = (n / r) max row norm^2
    return float(max(row_u, row_v) * f.sigma[0])


def resolve_beta(cfg, obs, truth=None):
    if cfg.beta is not None:
        return cfg.beta
    if cfg.beta_mode is BetaMode.ORACLE:
        if truth is None:
            raise ParameterError("oracle beta requires the ground truth")
        beta = truth.oracle_beta(cfg.beta_factor)
    else:
        beta = cfg.beta_factor * beta_data_driven(obs, cfg.rank_r)
    if not beta > 0:
        raise ParameterError(f"beta must be positive, got {beta}")
    return beta


class _TruthProbe:
    """Per-iterate comparisons against a known ground truth."""

    def __init__(self, truth, obs):
        self.l_star = truth.l_star
        self.scale = float(np.max(np.abs(truth.l_star)))
        s_star = truth.s_star
        self.s_on_obs = np.zeros(len(obs))
        if s_star is not None and len(s_star):
            self.truth_support = s_star.linear_index
            pos = np.searchsorted(obs.linear_index, self.truth_support)
            self.s_on_obs[pos] = s_star.values
        else:
            self.truth_support = np.empty(0, dtype=np.int64)

    def measure(self, l_t, s_t):
        inf_err = float(np.max(np.abs(l_t - self.l_star)))
        rel = inf_err / self.scale if self.scale > 0 else inf_err
        in_truth = bool(np.all(np.isin(s_t.support(), self.truth_support, assume_unique=True)))
        out_err = float(np.max(np.abs(s_t.values - self.s_on_obs), initial=0.0))
        return dict(inf_error=inf_err, rel_inf_error=rel, support_in_truth=in_truth, outlier_inf_error=out_err)


def _run(obs, cfg, kind, truth, timing):
    if cfg.rank_r > min(obs.shape):
        raise ParameterError(f"rank {cfg.rank_r} exceeds matrix dimensions {obs.shape}")
    beta = resolve_beta(cfg, obs, truth)
    probe = _TruthProbe(truth, obs) if truth is not None else None
    p = obs.sample_rate_p
    start = time.perf_counter()

    state = IterateState(t=0, l_t=np.zeros(obs.shape), xi_t=beta)
    records = []
    change = float("nan")
    termination = Termination.MAX_ITERS
    error = None

    while True:
        state.s_t = s_update(state, obs, kind)
        wall = int(round((time.perf_counter() - start) * 1000)) if timing else 0
        extra = probe.measure(state.l_t, state.s_t) if probe else {}
        records.append(IterRecord(
            t=state.t,
            xi=state.xi_t,
            successive_change=change,
            support_size=int(np.count_nonzero(state.s_t.values)),
            wall_ms=wall,
            **extra,
        ))
        if state.t > 0 and change < cfg.stop_tol:
            termination = Termination.CONVERGED
            break
        if state.t >= cfg.max_iters:
            break
        try:
            l_next = l_update(state, state.s_t, obs, cfg.rank_r, p, cfg.svd_method, cfg.svd_seed)
        except NumericalError as exc:
            termination = Termination.FAILED
            error = str(exc)
            log.warning("solve failed at t=%d: %s", state.t, exc)
            break
        prev_norm = float(np.linalg.norm(state.l_t))
        change = float(np.linalg.norm(l_next - state.l_t)) / max(prev_norm, CHANGE_FLOOR)
        state = IterateState(t=state.t + 1, l_t=l_next, xi_t=state.xi_t * cfg.gamma)

    return SolveTrace(
        records=records,
        l_hat=state.l_t,
        s_hat=state.s_t,
        termination=termination,
        beta=beta,
        error=error,
    )


def solve(obs, cfg, truth=None, timing=True):
    """Run the alternating thresholding / SVP iteration from L^0 = 0.

    Stops once the relative change ||L^{t+1} - L^t||_F / max(||L^t||_F, 1e-30)
    drops below ``cfg.stop_tol`` or after ``cfg.max_iters`` low-rank updates.
    The trace holds one record per iterate t = 0..T with the outlier estimate
    computed from that iterate; if ``truth`` is given the records also carry
    entrywise errors and whether the outlier support lies inside the true one.
    A failed SVD ends the run with ``Termination.FAILED`` instead of raising.
    """
    if not cfg.kind.conforming:
        warnings.warn(
            f"{cfg.kind} thresholding does not satisfy the Lipschitz property; "
            "use solve_rrmc for the hard-thresholding baseline",
            stacklevel=2,
        )
    return _run(obs, cfg, cfg.kind, truth, timing)


def solve_rrmc(obs, cfg, truth=None, timing=True):
    """Hard-thresholding baseline with threshold schedule beta * gamma**t."""
    return _run(obs, cfg, ThresholdKind.hard(), truth, timing)


def run_algorithm(name, obs, cfg, truth=None, timing=True):
    """Dispatch by algorithm name: ``hard`` runs the baseline, others ``solve``."""
    if name == "hard":
        return solve_rrmc(obs, cfg, truth, timing)
    return solve(obs, cfg, truth, timing)
