import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from robustmc.errors import ParameterError
from robustmc.problem import ObservationSet
from robustmc.thresholding import (
    ThresholdKind,
    apply,
    apply_scalar,
    apply_sparse,
    property_grid,
    verify_properties,
)

SOFT = ThresholdKind.soft()
SCAD3 = ThresholdKind.scad(3.0)
HARD = ThresholdKind.hard()
KINDS = [SOFT, SCAD3, ThresholdKind.scad(2.5), ThresholdKind.scad(5.0), HARD]


@pytest.mark.parametrize("kind, lam, x, expected", [
    (SOFT, 1.0, 0.5, 0.0),
    (SOFT, 1.0, 3.0, 2.0),
    (SCAD3, 1.0, 2.5, 2.0),
    (SCAD3, 1.0, 4.0, 4.0),
    (HARD, 1.0, 1.0, 0.0),
    (HARD, 1.0, 1.5, 1.5),
    (SCAD3, 1.0, 1.5, 0.5),
    (SCAD3, 1.0, -2.5, -2.0),
])
def test_scalar_examples(kind, lam, x, expected):
    assert apply_scalar(kind, lam, x) == expected


@pytest.mark.parametrize("kind", KINDS, ids=str)
def test_boundary_is_zero(kind):
    assert apply_scalar(kind, 0.7, 0.7) == 0.0
    assert apply_scalar(kind, 0.7, -0.7) == 0.0


def test_declared_constants():
    assert (SOFT.lipschitz_k, SOFT.offset_b) == (1.0, 1.0)
    assert SCAD3.lipschitz_k == 2.0 and SCAD3.offset_b == 1.0
    assert ThresholdKind.scad(5).lipschitz_k == pytest.approx(4 / 3)
    assert not HARD.conforming and HARD.lipschitz_k is None


def test_parameter_errors():
    with pytest.raises(ParameterError):
        apply_scalar(SOFT, 0.0, 1.0)
    with pytest.raises(ParameterError):
        ThresholdKind.scad(2.0)
    with pytest.raises(ParameterError):
        ThresholdKind("mcp")


@pytest.mark.parametrize("kind", KINDS, ids=str)
def test_vectorised_matches_scalar(kind):
    xs = np.linspace(-12, 12, 4801)
    vec = apply(kind, 1.3, xs)
    assert np.array_equal(vec, [apply_scalar(kind, 1.3, x) for x in xs])


@pytest.mark.parametrize("kind", KINDS, ids=str)
@given(lam=st.floats(1e-3, 1e3), x=st.floats(-1e4, 1e4, allow_nan=False))
def test_odd(kind, lam, x):
    assert apply_scalar(kind, lam, -x) == -apply_scalar(kind, lam, x)


@pytest.mark.parametrize("kind", [SOFT, SCAD3, ThresholdKind.scad(2.5)], ids=str)
@given(lam=st.floats(1e-2, 1e2), x=st.floats(-1e3, 1e3), y=st.floats(-1e3, 1e3))
def test_lipschitz_and_offset(kind, lam, x, y):
    tx, ty = apply_scalar(kind, lam, x), apply_scalar(kind, lam, y)
    scale = max(abs(x), abs(y), lam)
    assert abs(tx - ty) <= kind.lipschitz_k * abs(x - y) + 1e-12 * scale
    assert abs(tx - x) <= kind.offset_b * lam * (1 + 1e-12)


@pytest.mark.parametrize("a", [2.5, 3.0, 5.0])
@pytest.mark.parametrize("lam", [0.5, 1.0, 2.0])
def test_scad_continuity_at_knots(a, lam):
    kind = ThresholdKind.scad(a)
    for k in (lam, 2 * lam, a * lam):
        for x in (k, -k):
            left = apply_scalar(kind, lam, np.nextafter(x, -np.inf))
            right = apply_scalar(kind, lam, np.nextafter(x, np.inf))
            assert abs(left - right) <= 1e-12 * max(1.0, abs(x)) + 1e-12


def test_apply_sparse_examples():
    obs = ObservationSet(2, 2, [0, 0, 1], [0, 1, 1], [1.0, -0.2, 0.7], 0.75)
    soft = apply_sparse(SOFT, 0.5, obs)
    np.testing.assert_allclose(soft.values, [0.5, 0.0, 0.2], rtol=0, atol=1e-15)
    assert np.array_equal(soft.linear_index, obs.linear_index)
    assert soft.support().tolist() == [0, 3]
    hard = apply_sparse(HARD, 0.5, obs)
    assert hard.values.tolist() == [1.0, 0.0, 0.7]


def test_apply_sparse_all_inside():
    obs = ObservationSet(1, 3, [0, 0, 0], [0, 1, 2], [0.3, -0.4, 0.4], 1.0)
    out = apply_sparse(SCAD3, 0.4, obs)
    assert out.values.tolist() == [0.0, 0.0, 0.0] and out.support().size == 0


def test_verify_soft():
    lams = [0.5, 1.0, 2.0]
    rep = verify_properties(SOFT, lams, property_grid(SOFT, lams))
    assert rep.p1_holds and not rep.p2_unbounded
    assert rep.p2_max_ratio <= 1 + 1e-12
    assert rep.p3_max_offset_ratio <= 1 + 1e-12
    assert rep.conforms_to(SOFT)


def test_verify_scad():
    lams = [0.5, 1.0, 2.0]
    rep = verify_properties(SCAD3, lams, property_grid(SCAD3, lams))
    assert rep.p1_holds
    assert rep.p2_max_ratio <= 2 + 1e-12
    # the middle branch has slope exactly (a-1)/(a-2)
    assert rep.p2_max_ratio >= 2 - 1e-12


def test_verify_hard_flags_jump():
    rep = verify_properties(HARD, [1.0], property_grid(HARD, [1.0]))
    assert rep.p1_holds
    assert rep.p2_unbounded
    assert rep.p2_max_ratio > 50
    assert not rep.conforms_to(HARD)


def test_grid_preconditions():
    with pytest.raises(ParameterError):
        verify_properties(SOFT, [1.0], np.linspace(-1, 1, 1001))
    coarse = np.unique(np.concatenate([np.linspace(-5, 5, 101), [-1.0, 1.0, -2.0, 2.0]]))
    with pytest.raises(ParameterError):
        verify_properties(SOFT, [1.0], coarse)
    fine = np.linspace(-4.0005, 4.0005, 1601)
    with pytest.raises(ParameterError, match="knot"):
        verify_properties(SOFT, [1.0], fine)


@pytest.mark.parametrize("kind", KINDS, ids=str)
def test_pair_ratio_matches_brute_force(kind):
    from robustmc.thresholding import _max_pair_ratio
    xs = np.sort(np.random.default_rng(0).uniform(-8, 8, 400))
    ts = apply(kind, 1.0, xs)
    dx = np.abs(xs[:, None] - xs[None, :])
    dt = np.abs(ts[:, None] - ts[None, :])
    brute = np.max(dt[dx > 0] / dx[dx > 0])
    assert _max_pair_ratio(xs, ts) == pytest.approx(brute, rel=1e-12)


@pytest.mark.parametrize("kind", [SOFT, SCAD3, ThresholdKind.scad(5.0)], ids=str)
def test_pair_excess_matches_brute_force(kind):
    from robustmc.thresholding import _max_pair_excess
    xs = np.sort(np.random.default_rng(1).uniform(-8, 8, 400))
    ts = apply(kind, 1.0, xs)
    k = 0.5 * kind.lipschitz_k  # force a positive excess so the comparison is not trivial
    dx = np.abs(xs[:, None] - xs[None, :])
    dt = np.abs(ts[:, None] - ts[None, :])
    brute = np.max((dt - k * dx)[dx > 0])
    assert _max_pair_excess(xs, ts, k) == pytest.approx(brute, rel=1e-12, abs=1e-12)


def test_scad_wide_lambda_range_conforms():
    lams = [0.1, 0.5, 1.0, 2.0, 10.0]
    kind = ThresholdKind.scad(5.0)
    rep = verify_properties(kind, lams, property_grid(kind, lams))
    assert rep.conforms_to(kind)
    assert abs(rep.p2_max_excess) <= 1e-12 and abs(rep.p3_max_excess) <= 1e-12
