"""Entrywise thresholding operators for the outlier update.

Three operators are provided: soft thresholding, SCAD and hard thresholding.
A thresholding function T with parameter lam is *conforming* when

* T(x) = 0 whenever |x| <= lam,
* T is K-Lipschitz for some constant K,
* |T(x) - x| <= B * lam for some constant B.

Soft (K = 1, B = 1) and SCAD with a > 2 (K = (a-1)/(a-2), B = 1) conform.
Hard thresholding jumps at |x| = lam and is not Lipschitz; it is kept for the
hard-thresholding baseline solver.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError

SOFT = "soft"
SCAD = "scad"
HARD = "hard"
DEFAULT_SCAD_A = 3.0


@dataclass(frozen=True)
class ThresholdKind:
    name: str
    a: float = DEFAULT_SCAD_A

    def __post_init__(self):
        if self.name not in (SOFT, SCAD, HARD):
            raise ParameterError(f"unknown threshold kind {self.name!r}")
        if self.name == SCAD and not self.a > 2:
            raise ParameterError(f"SCAD needs a > 2, got {self.a}")

    @classmethod
    def soft(cls):
        return cls(SOFT)

    @classmethod
    def scad(cls, a=DEFAULT_SCAD_A):
        return cls(SCAD, float(a))

    @classmethod
    def hard(cls):
        return cls(HARD)

    @classmethod
    def from_name(cls, name, scad_a=DEFAULT_SCAD_A):
        if name == SCAD:
            return cls.scad(scad_a)
        return cls(name)

    @property
    def conforming(self):
        return self.name != HARD

    @property
    def lipschitz_k(self):
        if self.name == SOFT:
            return 1.0
        if self.name == SCAD:
            return (self.a - 1.0) / (self.a - 2.0)
        return None

    @property
    def offset_b(self):
        return 1.0 if self.conforming else None

    def knots(self, lam):
        """Breakpoints of the positive half of the piecewise-linear map."""
        if self.name == SCAD:
            return (lam, 2.0 * lam, self.a * lam)
        return (lam,)

    def __str__(self):
        return f"scad(a={self.a:g})" if self.name == SCAD else self.name


def _check_lambda(lam):
    if not lam > 0:
        raise ParameterError(f"threshold must be positive, got {lam}")


def apply_scalar(kind, lam, x):
    """Evaluate the thresholding function at a single point."""
    _check_lambda(lam)
    z = abs(x)
    if z <= lam:
        return 0.0
    s = math.copysign(1.0, x)
    if kind.name == SOFT:
        return s * (z - lam)
    if kind.name == HARD:
        return float(x)
    a = kind.a
    if z <= 2.0 * lam:
        return s * (z - lam)
    if z < a * lam:
        return s * (((a - 1.0) * z - a * lam) / (a - 2.0))
    return float(x)


def apply(kind, lam, x):
    """Vectorised ``apply_scalar``; agrees with it bit for bit."""
    _check_lambda(lam)
    x = np.asarray(x, dtype=float)
    z = np.abs(x)
    s = np.sign(x)
    if kind.name == SOFT:
        out = s * np.maximum(z - lam, 0.0)
    elif kind.name == HARD:
        out = np.where(z <= lam, 0.0, x)
    else:
        a = kind.a
        out = s * np.maximum(z - lam, 0.0)
        mid = (z > 2.0 * lam) & (z < a * lam)
        out[mid] = s[mid] * (((a - 1.0) * z[mid] - a * lam) / (a - 2.0))
        big = z >= a * lam
        out[big] = x[big]
    # -0.0 from sign * 0 is normalised so zeros compare and print uniformly
    out[out == 0.0] = 0.0
    return out


def apply_sparse(kind, lam, residual):
    """Threshold the values of an observation set, keeping its index set."""
    return residual.with_values(apply(kind, lam, residual.values))


@dataclass(frozen=True)
class PropertyReport:
    p1_holds: bool
    p2_max_ratio: float
    p3_max_offset_ratio: float
    samples: int
    p2_unbounded: bool = False
    # worst |T(x) - T(y)| - K |x - y| and |T(x) - x| - B lam with the declared
    # constants; infinite for kinds that declare none
    p2_max_excess: float = math.inf
    p3_max_excess: float = math.inf

    def conforms_to(self, kind, tol=1e-12):
        """Declared constants hold on the grid up to an additive ``tol``."""
        if not kind.conforming:
            return False
        return (
            self.p1_holds
            and not self.p2_unbounded
            and self.p2_max_excess <= tol
            and self.p3_max_excess <= tol
        )


def _reach(kind):
    # half-width multiplier of the region the grid must cover, in units of lam
    return 2.0 * (kind.a if kind.name == SCAD else 2.0)


def property_grid(kind, lambdas, spacing=None):
    """Grid suitable for ``verify_properties``.

    The default spacing is the largest power of two not exceeding
    min(lambdas) / 100, which keeps grid points exactly representable; all
    knots (and their negatives) are merged in.
    """
    lam_min, lam_max = min(lambdas), max(lambdas)
    if spacing is None:
        spacing = 2.0 ** math.floor(math.log2(lam_min / 100.0))
    half = math.ceil(_reach(kind) * lam_max / spacing)
    grid = np.arange(-half, half + 1) * spacing
    knots = [k for lam in lambdas for k in kind.knots(lam)]
    knots += [2.0 * lam for lam in lambdas]
    extra = np.array(knots + [-k for k in knots])
    return np.unique(np.concatenate([grid, extra]))


def _check_grid(kind, lambdas, xs):
    lam_min, lam_max = min(lambdas), max(lambdas)
    reach = _reach(kind) * lam_max
    if xs[0] > -reach or xs[-1] < reach:
        raise ParameterError(f"grid must cover [-{reach:g}, {reach:g}]")
    if np.max(np.diff(xs)) > lam_min / 100.0:
        raise ParameterError(f"grid spacing exceeds {lam_min / 100.0:g}")
    present = set(xs.tolist())
    for lam in lambdas:
        for k in kind.knots(lam):
            if k not in present or -k not in present:
                raise ParameterError(f"grid misses knot +-{k:g}")


def _max_pair_ratio(xs, ts):
    """Largest |T(x) - T(y)| / |x - y| over all pairs of a sorted grid.

    For sorted points the chord slope between any two is a weighted mean of
    the slopes between neighbours, so the neighbour maximum is exact.
    """
    if xs.size < 2:
        return 0.0
    return float(np.max(np.abs(np.diff(ts)) / np.diff(xs)))


def _max_pair_excess(xs, ts, k):
    """Largest |T(x) - T(y)| - k |x - y| over all pairs of a sorted grid.

    For i < j this is max((t_j - k x_j) - (t_i - k x_i)) together with the
    same expression for -t, so running minima give the exact all-pairs value.
    """
    if xs.size < 2:
        return 0.0
    best = -math.inf
    for t in (ts, -ts):
        g = t - k * xs
        prefix_min = np.minimum.accumulate(g)[:-1]
        best = max(best, float(np.max(g[1:] - prefix_min)))
    return best


def verify_properties(kind, lambdas, xs):
    """Check the three conformity properties exhaustively on a grid.

    P.1 is checked for exact zeros. The Lipschitz ratio and the additive
    excess over the declared K are computed exactly over every pair of grid
    points, and the offset ratio and excess at every grid point.
    ``p2_unbounded`` is set when some pair of neighbouring grid points
    differs by at least half the threshold, i.e. the function jumps.
    """
    lambdas = [float(lam) for lam in lambdas]
    for lam in lambdas:
        _check_lambda(lam)
    xs = np.unique(np.asarray(xs, dtype=float))
    _check_grid(kind, lambdas, xs)

    p1 = True
    p2 = 0.0
    p3 = 0.0
    ex2 = ex3 = -math.inf if kind.conforming else math.inf
    jump = False
    for lam in lambdas:
        ts = apply(kind, lam, xs)
        inside = np.abs(xs) <= lam
        p1 = p1 and bool(np.all(ts[inside] == 0.0))
        p2 = max(p2, _max_pair_ratio(xs, ts))
        p3 = max(p3, float(np.max(np.abs(ts - xs)) / lam))
        jump = jump or bool(np.max(np.abs(np.diff(ts))) >= 0.5 * lam)
        if kind.conforming:
            ex2 = max(ex2, _max_pair_excess(xs, ts, kind.lipschitz_k))
            ex3 = max(ex3, float(np.max(np.abs(ts - xs) - kind.offset_b * lam)))
    return PropertyReport(
        p1_holds=p1,
        p2_max_ratio=p2,
        p3_max_offset_ratio=p3,
        samples=xs.size * len(lambdas),
        p2_unbounded=jump,
        p2_max_excess=ex2,
        p3_max_excess=ex3,
    )
