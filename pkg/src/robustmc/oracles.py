"""Randomised numerical checks of deterministic matrix inequalities.

Each check draws small random instances that satisfy a lemma's hypotheses,
evaluates both sides of its conclusion and records the worst slack
(bound minus observed value) and the number of violations. The inequalities
hold for every instance, so any violation is a bug.
"""

from dataclasses import dataclass

import numpy as np

from .linalg import spectral_norm, truncated_svd, two_inf_norm
from .problem import ground_truth_from_matrix, make_instance
from .rng import gaussians, stream
from .solver import IterateState, s_update
from .thresholding import ThresholdKind

LEMMAS = ("sparse-spectral", "perturbation", "sparse-projection", "threshold")


@dataclass(frozen=True)
class OracleReport:
    lemma_name: str
    trials: int
    worst_slack: float
    violations: int

    @property
    def ok(self):
        return self.violations == 0

    def line(self):
        status = "PASS" if self.ok else "FAIL"
        return (f"{status} {self.lemma_name}: trials={self.trials} "
                f"violations={self.violations} worst_slack={self.worst_slack:.6g}")


class _Tally:
    def __init__(self, name):
        self.name = name
        self.trials = 0
        self.worst = np.inf
        self.violations = 0

    def add(self, slack, tol=0.0):
        self.trials += 1
        self.worst = min(self.worst, slack)
        if slack < -tol:
            self.violations += 1

    def report(self, trials):
        return OracleReport(self.name, trials, float(self.worst), self.violations)


def _normal(gen, *shape):
    return gaussians(gen, int(np.prod(shape))).reshape(shape)


def sparse_pattern(gen, n1, n2, k):
    """Boolean pattern with at most ``k`` entries in every row and column.

    Union of ``k`` random partial permutation matrices.
    """
    pattern = np.zeros((n1, n2), dtype=bool)
    m = min(n1, n2)
    for _ in range(k):
        rows = gen.permutation(n1)[:m]
        cols = gen.permutation(n2)[:m]
        pattern[rows, cols] = True
    return pattern


def stacked_factors(u, v):
    return np.vstack([u, v])


def procrustes_rotation(f_star, f):
    """Orthogonal G minimising ||F - F* G||_F, from the SVD of F*^T F."""
    a, _, bt = np.linalg.svd(f_star.T @ f)
    return a @ bt


def random_orthogonal(gen, r):
    q, rr = np.linalg.qr(_normal(gen, r, r))
    return q * np.sign(np.diag(rr))


def check_sparse_spectral(trials, seed):
    """||S||_2 <= alpha n ||S||_inf for S with <= alpha n nonzeros per row and column."""
    tally = _Tally("sparse-spectral")
    for trial in range(trials):
        gen = stream(seed, "sparse-spectral", trial)
        n = int(gen.integers(2, 31))
        k = int(gen.integers(1, n + 1))
        pattern = sparse_pattern(gen, n, n, k)
        s = np.where(pattern, _normal(gen, n, n), 0.0)
        if trial % 3 == 0:
            # equal-magnitude signs push towards the extremal case
            s = np.sign(s)
        alpha_n = k
        bound = alpha_n * float(np.max(np.abs(s)))
        observed = float(np.linalg.norm(s, 2))
        tally.add(bound - observed, tol=1e-9)
    return tally.report(trials)


def perturbation_sides(l_star, r, e):
    """Both sides of the entrywise perturbation bound for P_r(L* + E).

    Returns ``(lhs, rhs, f_star, f, g)``: the observed ||P_r(L* + E) - L*||_inf,
    the bound, the stacked factors of L* and of the projection, and the
    Procrustes rotation aligning them.
    """
    truth = ground_truth_from_matrix(l_star, r)
    fs = truth.factors
    pert = truncated_svd(l_star + e, r, method="full")
    l_hat = pert.reconstruct()
    f_star = stacked_factors(fs.u, fs.v)
    f = stacked_factors(pert.u, pert.v)
    g = procrustes_rotation(f_star, f)
    delta = f - f_star @ g
    kappa = fs.sigma[0] / fs.sigma[-1]
    lhs = float(np.max(np.abs(l_hat - l_star)))
    rhs = (two_inf_norm(delta) * (two_inf_norm(f) + two_inf_norm(f_star)) * float(pert.sigma[0])
           + (3.0 + 4.0 * kappa) * two_inf_norm(f_star) ** 2 * float(np.linalg.norm(e, 2)))
    return lhs, rhs, f_star, f, g


def check_perturbation_bound(trials, seed, rotations=50):
    """Entrywise error of P_r(L* + E) bounded through the aligned factor error.

    Also confirms that the Procrustes rotation beats ``rotations`` random
    orthogonal matrices; a loss counts as a violation.
    """
    tally = _Tally("perturbation")
    for trial in range(trials):
        gen = stream(seed, "perturbation", trial)
        n = int(gen.integers(6, 41))
        r = int(gen.integers(1, min(5, n // 2) + 1))
        l_star = _normal(gen, n, r) @ _normal(gen, n, r).T
        sigma = np.linalg.svd(l_star, compute_uv=False)
        sigma_r = sigma[r - 1]
        e = _normal(gen, n, n)
        if trial % 4 == 1:
            e = np.outer(_normal(gen, n), _normal(gen, n))
        target = 0.4 * sigma_r * float(gen.uniform(0.0, 1.0)) if trial % 5 else 0.4 * sigma_r
        e *= target / spectral_norm(e)
        lhs, rhs, f_star, f, g = perturbation_sides(l_star, r, e)
        tally.add(rhs - lhs, tol=1e-8 * sigma[0])
        best = np.linalg.norm(f - f_star @ g)
        for _ in range(rotations):
            other = np.linalg.norm(f - f_star @ random_orthogonal(gen, r))
            if best > other + 1e-9:
                tally.violations += 1
                break
    return tally.report(trials)


def sparse_projection_sides(pattern, a, b, c):
    """||P_pattern(A B^T)||_F^2 and its bound c * min(...)."""
    lhs = float(np.sum(np.where(pattern, a @ b.T, 0.0) ** 2))
    fa, fb = float(np.sum(a**2)), float(np.sum(b**2))
    ra, rb = two_inf_norm(a) ** 2, two_inf_norm(b) ** 2
    return lhs, c * min(fa * rb, ra * fb)


def check_sparse_projection_bound(trials, seed, n=25, r=3):
    """||P(A B^T)||_F^2 <= 2 alpha p n min(||A||_F^2 ||B||_2inf^2, ||A||_2inf^2 ||B||_F^2)."""
    tally = _Tally("sparse-projection")
    for trial in range(trials):
        gen = stream(seed, "sparse-projection", trial)
        k = int(gen.integers(1, n + 1))
        p = float(gen.uniform(0.05, 1.0))
        alpha = k / (2.0 * p * n)
        pattern = sparse_pattern(gen, n, n, k)
        a = _normal(gen, n, r)
        b = _normal(gen, n, r)
        if trial % 2:
            # one heavy row makes the 2,inf norms bite
            a[int(gen.integers(n))] *= 10.0
            b[int(gen.integers(n))] *= 10.0
        lhs, rhs = sparse_projection_sides(pattern, a, b, 2.0 * alpha * p * n)
        tally.add(rhs - lhs, tol=1e-9)
    return tally.report(trials)


def threshold_lemma_sides(truth, obs, l_t, kind, beta, t, gamma):
    """Support containment flag, observed outlier error and its bound."""
    state = IterateState(t=t, l_t=l_t, xi_t=beta * gamma**t)
    s_t = s_update(state, obs, kind)
    truth_support = truth.s_star.linear_index
    contained = bool(np.all(np.isin(s_t.support(), truth_support)))
    s_on_obs = np.zeros(len(obs))
    pos = np.searchsorted(obs.linear_index, truth_support)
    s_on_obs[pos] = truth.s_star.values
    err = float(np.max(np.abs(s_t.values - s_on_obs), initial=0.0))
    bound = (kind.lipschitz_k + kind.offset_b) * state.xi_t
    return contained, err, bound


def check_threshold_lemma(trials, seed):
    """Outlier support and entrywise error after one thresholding step.

    For iterates within (mu r / n) sigma_1 gamma^t of L* entrywise and
    beta >= (mu r / n) sigma_1, the estimated support lies inside the true
    outlier support and the error is at most (K + B) beta gamma^t. Checked for
    soft thresholding and SCAD; a support escape counts as a violation.
    """
    tally = _Tally("threshold")
    for trial in range(trials):
        gen = stream(seed, "threshold", trial)
        n = int(gen.integers(10, 41))
        r = int(gen.integers(1, 4))
        p = float(gen.uniform(0.3, 1.0))
        alpha = float(gen.uniform(0.0, 0.3))
        truth, obs, _ = make_instance(n, n, r, p, alpha, int(gen.integers(2**62)))
        t = int(gen.integers(0, 21))
        gamma = float(gen.uniform(0.5, 0.99))
        scale = truth.entry_scale
        beta = float(gen.uniform(1.0, 1.5)) * scale
        radius = scale * gamma**t
        # clip slightly inside the radius so rounding in the sum keeps the premise
        clip = radius * (1.0 - 1e-12)
        noise = gen.uniform(-1.5, 1.5, size=truth.shape) * radius
        l_t = truth.l_star + np.clip(noise, -clip, clip)
        for kind in (ThresholdKind.soft(), ThresholdKind.scad(3.0)):
            contained, err, bound = threshold_lemma_sides(truth, obs, l_t, kind, beta, t, gamma)
            tally.add(bound - err, tol=1e-12 * max(1.0, bound))
            if not contained:
                tally.violations += 1
    return tally.report(trials)


CHECKS = {
    "sparse-spectral": check_sparse_spectral,
    "perturbation": check_perturbation_bound,
    "sparse-projection": check_sparse_projection_bound,
    "threshold": check_threshold_lemma,
}


def run_checks(lemma, trials, seed):
    names = LEMMAS if lemma == "all" else (lemma,)
    return [CHECKS[name](trials, seed) for name in names]
