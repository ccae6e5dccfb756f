"""Synthetic robust matrix completion instances.

An instance is a rank-r matrix L* = X Y^T with standard Gaussian factors, a
Bernoulli(p) observation mask and, on each observed entry independently with
probability alpha, an additive outlier drawn uniformly from
[-2 ||L*||_inf, 2 ||L*||_inf].
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import DimensionError, ParameterError
from .linalg import IncoherenceReport, SvdFactors, as_dense, incoherence, truncated_svd
from .rng import gaussians, stream, uniforms


@dataclass(frozen=True)
class ObservationSet:
    """Values on a sorted, duplicate-free set of 0-based (row, col) indices."""

    rows: int
    cols: int
    i: np.ndarray
    j: np.ndarray
    values: np.ndarray
    sample_rate_p: float = None

    def __post_init__(self):
        i = np.asarray(self.i, dtype=np.int64).ravel()
        j = np.asarray(self.j, dtype=np.int64).ravel()
        values = np.asarray(self.values, dtype=float).ravel()
        if not (i.size == j.size == values.size):
            raise DimensionError("index and value arrays differ in length")
        if self.rows < 1 or self.cols < 1:
            raise DimensionError("matrix dimensions must be positive")
        if i.size and (i.min() < 0 or i.max() >= self.rows or j.min() < 0 or j.max() >= self.cols):
            raise DimensionError("observation index out of range")
        lin = i * self.cols + j
        if lin.size > 1 and not np.all(np.diff(lin) > 0):
            raise DimensionError("observation indices must be strictly sorted by (i, j)")
        if not np.all(np.isfinite(values)):
            raise ParameterError("observation values must be finite")
        p = self.sample_rate_p
        if p is None:
            p = i.size / (self.rows * self.cols)
        if not 0 < p <= 1:
            raise ParameterError(f"sample rate must lie in (0, 1], got {p}")
        object.__setattr__(self, "i", i)
        object.__setattr__(self, "j", j)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "sample_rate_p", float(p))

    @classmethod
    def from_mask(cls, matrix, mask, p=None):
        mask = np.asarray(mask, dtype=bool)
        i, j = np.nonzero(mask)
        return cls(mask.shape[0], mask.shape[1], i, j, np.asarray(matrix, dtype=float)[i, j], p)

    @property
    def shape(self):
        return (self.rows, self.cols)

    @property
    def linear_index(self):
        return self.i * self.cols + self.j

    def __len__(self):
        return self.values.size

    def with_values(self, values):
        return replace(self, values=values)

    def support(self):
        """Linear indices of the entries with nonzero value."""
        return self.linear_index[self.values != 0.0]

    def to_dense(self):
        out = np.zeros(self.shape)
        out[self.i, self.j] = self.values
        return out

    def mask(self):
        out = np.zeros(self.shape, dtype=bool)
        out[self.i, self.j] = True
        return out


@dataclass(frozen=True)
class SparsityStats:
    max_row_count: int
    max_col_count: int
    alpha_hat: float
    total_outliers: int


@dataclass(frozen=True)
class GroundTruth:
    l_star: np.ndarray
    factors: SvdFactors
    incoherence: IncoherenceReport
    s_star: ObservationSet = None

    @property
    def rank(self):
        return self.factors.rank

    @property
    def shape(self):
        return self.l_star.shape

    @property
    def sigma1(self):
        return float(self.factors.sigma[0])

    @property
    def entry_scale(self):
        """(mu r / n) * sigma_1, the entrywise bound implied by incoherence."""
        n = max(self.shape)
        return self.incoherence.mu * self.rank / n * self.sigma1

    def oracle_beta(self, factor=1.1):
        return factor * self.entry_scale


@dataclass(frozen=True)
class AssumptionReport:
    mu: float
    kappa: float
    alpha_hat: float
    p: float
    sample_ratio: float
    outlier_ratio: float


def ground_truth_from_matrix(l_star, r, s_star=None):
    """Wrap a known rank-``r`` matrix with its factors and incoherence."""
    l_star = as_dense(l_star)
    factors = truncated_svd(l_star, r, method="full")
    return GroundTruth(l_star, factors, incoherence(factors.u, factors.v, factors.sigma), s_star)


def gen_ground_truth(n1, n2, r, seed):
    """L* = X Y^T with i.i.d. standard normal X (n1 x r) and Y (n2 x r)."""
    if not (1 <= r <= min(n1, n2)):
        raise DimensionError(f"rank {r} out of range for {n1} x {n2}")
    gen = stream(seed, "ground-truth")
    z = gaussians(gen, (n1 + n2) * r)
    x = z[: n1 * r].reshape(n1, r)
    y = z[n1 * r:].reshape(n2, r)
    return ground_truth_from_matrix(x @ y.T, r)


def sample_mask(n1, n2, p, seed):
    """Boolean mask with each entry kept independently with probability ``p``.

    One uniform per entry, consumed in row-major order.
    """
    if not 0 < p <= 1:
        raise ParameterError(f"sample rate must lie in (0, 1], got {p}")
    u = uniforms(stream(seed, "mask"), n1 * n2)
    return (u < p).reshape(n1, n2)


def _max_counts(i, j, n1, n2):
    rows = np.bincount(i, minlength=n1)
    cols = np.bincount(j, minlength=n2)
    return int(rows.max(initial=0)), int(cols.max(initial=0))


def sparsity_stats(s_star, p):
    n1, n2 = s_star.shape
    mr, mc = _max_counts(s_star.i, s_star.j, n1, n2)
    return SparsityStats(
        max_row_count=mr,
        max_col_count=mc,
        alpha_hat=max(mr, mc) / (p * max(n1, n2)),
        total_outliers=len(s_star),
    )


def inject_outliers(gt, mask, alpha, seed, p=None):
    """Corrupt the observed entries of ``gt.l_star``.

    Each observed entry, visited in row-major order, consumes two uniforms:
    the first decides corruption (probability ``alpha``), the second sets the
    outlier value in [-2 ||L*||_inf, 2 ||L*||_inf). A corrupted entry stays in
    the outlier support even if its drawn value is zero.

    Returns ``(observations, stats, truth)`` where ``truth`` is ``gt`` with
    its ``s_star`` filled in. ``p`` is the nominal sampling rate recorded in
    the observations (defaults to the observed fraction).
    """
    if not 0 <= alpha < 1:
        raise ParameterError(f"outlier rate must lie in [0, 1), got {alpha}")
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != gt.shape:
        raise DimensionError("mask shape differs from ground truth")
    i, j = np.nonzero(mask)
    if i.size == 0:
        raise ParameterError("observation mask is empty")
    n1, n2 = gt.shape
    u = uniforms(stream(seed, "outliers"), 2 * i.size).reshape(i.size, 2)
    corrupt = u[:, 0] < alpha
    bound = 2.0 * float(np.max(np.abs(gt.l_star)))
    outlier_vals = (2.0 * u[:, 1] - 1.0) * bound
    s_vals = np.where(corrupt, outlier_vals, 0.0)

    observed = gt.l_star[i, j] + s_vals
    obs = ObservationSet(n1, n2, i, j, observed, p)
    s_star = ObservationSet(n1, n2, i[corrupt], j[corrupt], s_vals[corrupt], obs.sample_rate_p)
    stats = sparsity_stats(s_star, obs.sample_rate_p)
    return obs, stats, replace(gt, s_star=s_star)


def make_instance(n1, n2, r, p, alpha, seed):
    """Ground truth, mask and outliers from one seed (independent sub-streams)."""
    gt = gen_ground_truth(n1, n2, r, seed)
    mask = sample_mask(n1, n2, p, seed)
    obs, stats, truth = inject_outliers(gt, mask, alpha, seed, p=p)
    return truth, obs, stats


def check_assumptions(gt, obs, stats):
    """Report the quantities entering the recovery conditions.

    The two ratios drop the unknown absolute constants:
    sample_ratio = p n / (kappa^4 mu^3 r^3 log n) and
    outlier_ratio = alpha_hat kappa^2 mu^2 r^2.
    """
    if gt.shape != obs.shape:
        raise DimensionError("observations and ground truth differ in shape")
    mu, kappa, r = gt.incoherence.mu, gt.incoherence.kappa, gt.rank
    n = max(gt.shape)
    p = obs.sample_rate_p
    denom = kappa**4 * mu**3 * r**3 * math.log(n) if n > 1 else 0.0
    return AssumptionReport(
        mu=mu,
        kappa=kappa,
        alpha_hat=stats.alpha_hat,
        p=p,
        sample_ratio=p * n / denom if denom > 0 else math.inf,
        outlier_ratio=stats.alpha_hat * kappa**2 * mu**2 * r**2,
    )
