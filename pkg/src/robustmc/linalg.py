"""Dense linear algebra: truncated SVD, rank-k projection, norms, incoherence.

Matrices are plain two-dimensional float64 numpy arrays.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DimensionError, NumericalError, ParameterError
from .rng import gaussians, stream

FULL_SVD_MAX_DIM = 2000
SPECTRAL_MAX_ITERS = 100
SPECTRAL_RTOL = 1e-12


@dataclass(frozen=True)
class SvdFactors:
    u: np.ndarray
    sigma: np.ndarray
    v: np.ndarray

    @property
    def rank(self):
        return self.sigma.size

    def reconstruct(self):
        return (self.u * self.sigma) @ self.v.T


@dataclass(frozen=True)
class IncoherenceReport:
    mu: float
    row_norm_u: float
    row_norm_v: float
    kappa: float


class Norms(NamedTuple):
    frobenius: float
    entrywise_max: float
    two_inf: float
    two_inf_transpose: float


def as_dense(a):
    """Validate ``a`` as a finite 2-D float array and return it as float64."""
    arr = np.asarray(a, dtype=float)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DimensionError(f"expected a nonempty 2-D matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NumericalError("matrix has non-finite entries")
    return arr


def _canonical_signs(u, v):
    # largest |u_ij| in each column made positive; argmax picks the lowest index on ties
    if u.shape[1] == 0:
        return u, v
    idx = np.argmax(np.abs(u), axis=0)
    signs = np.sign(u[idx, np.arange(u.shape[1])])
    signs[signs == 0] = 1.0
    return u * signs, v * signs


def _full_svd(a, k):
    try:
        u, s, vt = np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"SVD did not converge: {exc}") from exc
    return u[:, :k], s[:k], vt[:k].T


def block_power_svd(a, k, oversample=10, power_iters=4, seed=0):
    """Rank-k SVD by block power (subspace) iteration.

    Starts from a seeded Gaussian block of ``k + oversample`` columns and
    re-orthonormalises with QR after every multiplication. Falls back to the
    dense SVD when the block would cover the smaller dimension anyway.
    """
    n1, n2 = a.shape
    width = k + oversample
    if width >= min(n1, n2):
        return _full_svd(a, k)
    start = gaussians(stream(seed, "block-power-start", n2, width), n2 * width)
    q, _ = np.linalg.qr(a @ start.reshape(n2, width))
    for _ in range(power_iters):
        z, _ = np.linalg.qr(a.T @ q)
        q, _ = np.linalg.qr(a @ z)
    ub, s, vt = _full_svd(q.T @ a, k)
    return q @ ub, s, vt


def truncated_svd(a, k, method="auto", seed=0):
    """Leading ``k`` singular triplets of ``a``.

    ``method`` is ``"full"`` (dense SVD, then truncate), ``"block"`` (block
    power iteration) or ``"auto"``, which uses the dense SVD whenever the
    smaller dimension is at most 2000. With repeated singular values at
    position ``k`` the split is made by index, which still yields a best
    rank-k approximation.

    Singular pairs are sign-normalised so that the largest-magnitude entry of
    every left singular vector is positive.
    """
    a = as_dense(a)
    if not (isinstance(k, (int, np.integer)) and 1 <= k <= min(a.shape)):
        raise DimensionError(f"rank {k} out of range for shape {a.shape}")
    if method == "auto":
        method = "full" if min(a.shape) <= FULL_SVD_MAX_DIM else "block"
    if method == "full":
        u, s, v = _full_svd(a, k)
    elif method == "block":
        u, s, v = block_power_svd(a, k, seed=seed)
    else:
        raise ParameterError(f"unknown SVD method {method!r}")
    if not (np.all(np.isfinite(s)) and np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
        raise NumericalError("SVD produced non-finite factors")
    u, v = _canonical_signs(u, v)
    return SvdFactors(u=u, sigma=s, v=v)


def rank_r_project(a, k, method="auto", seed=0):
    """Best rank-``k`` approximation of ``a`` in Frobenius norm."""
    return truncated_svd(a, k, method=method, seed=seed).reconstruct()


def spectral_norm(a):
    """Largest singular value by power iteration on ``a.T @ a``.

    Starts from the normalised all-ones vector (or, if ``a`` annihilates it,
    the first coordinate vector that it does not) and stops after 100 steps
    or once the Rayleigh quotient changes by less than 1e-12 relatively.
    """
    a = as_dense(a)
    n = a.shape[1]
    x = np.full(n, 1.0 / np.sqrt(n))
    if not np.any(a @ x):
        nonzero_cols = np.flatnonzero(np.any(a != 0, axis=0))
        if nonzero_cols.size == 0:
            return 0.0
        x = np.zeros(n)
        x[nonzero_cols[0]] = 1.0
    lam = 0.0
    for _ in range(SPECTRAL_MAX_ITERS):
        y = a.T @ (a @ x)
        new_lam = float(x @ y)
        norm_y = np.linalg.norm(y)
        if norm_y == 0.0:
            return 0.0
        x = y / norm_y
        if abs(new_lam - lam) <= SPECTRAL_RTOL * abs(new_lam):
            lam = new_lam
            break
        lam = new_lam
    return float(np.sqrt(max(lam, 0.0)))


def two_inf_norm(a):
    """Largest Euclidean row norm."""
    return float(np.sqrt(np.max(np.sum(np.square(a), axis=1))))


def norms(a):
    a = np.asarray(a, dtype=float)
    return Norms(
        frobenius=float(np.linalg.norm(a)),
        entrywise_max=float(np.max(np.abs(a))),
        two_inf=two_inf_norm(a),
        two_inf_transpose=two_inf_norm(a.T),
    )


def incoherence(u, v, sigma):
    """Incoherence ``mu`` and condition number of a factorisation.

    mu = (n / r) * max(||u||_{2,inf}^2, ||v||_{2,inf}^2) with n the larger row
    count of the two factors.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    sigma = np.asarray(sigma, dtype=float).ravel()
    if u.ndim != 2 or v.ndim != 2 or u.shape[1] != v.shape[1] or u.shape[1] != sigma.size:
        raise DimensionError("factor column counts disagree")
    r = sigma.size
    if r == 0 or sigma[-1] <= 0:
        raise ParameterError("smallest singular value must be positive")
    n = max(u.shape[0], v.shape[0])
    row_u = two_inf_norm(u)
    row_v = two_inf_norm(v)
    mu = n / r * max(row_u**2, row_v**2)
    return IncoherenceReport(mu=mu, row_norm_u=row_u, row_norm_v=row_v, kappa=float(sigma[0] / sigma[-1]))
