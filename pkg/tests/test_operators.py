import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bregfb.core import ContractError
from bregfb.kernels import finite_difference_gradient
from bregfb.operators import (
    GradientMap,
    L1Subdifferential,
    LinearMap,
    LinearOperator,
    NormalConeBox,
    NormalConeHalfspace,
    NormalConeSimplex,
    PowerGradient,
    ScalarRelation,
    SeparableOperator,
    ZeroMap,
    ZeroOperator,
    rotation,
)


def test_linear_map_rejects_non_monotone():
    with pytest.raises(ContractError):
        LinearMap([[-1.0]])
    with pytest.raises(ContractError):
        LinearOperator([[0.0, 1.0], [0.0, -1.0]])


def test_rotation_is_monotone_without_potential():
    R = rotation()
    x = np.array([1.0, 2.0])
    assert abs(np.dot(x, R(x))) <= 1e-15
    assert not R.has_potential


@pytest.mark.parametrize("B", [
    ZeroMap(2),
    LinearMap(np.array([[2.0, 0.5], [0.5, 1.0]]), [1.0, -1.0]),
    PowerGradient(1.5, [1.0, 0.5]),
    PowerGradient(3.0, [2.0, 1.0]),
], ids=["zero", "linear", "power1.5", "power3"])
def test_single_valued_maps(B):
    rng = np.random.default_rng(0)
    for _ in range(200):
        x, y = rng.uniform(-3, 3, 2), rng.uniform(-3, 3, 2)
        assert np.dot(B(x) - B(y), x - y) >= -1e-10
        if B.has_potential and np.all(np.abs(x) > 0.1):
            g = B(x)
            fd = finite_difference_gradient(B.potential, x)
            assert np.linalg.norm(g - fd) <= 1e-6 * (1 + np.linalg.norm(g))
            assert B.potential_divergence(x, y) >= -1e-12


def test_gradient_map_domain():
    B = GradientMap(1, lambda x: -1.0 / x, psi=lambda x: -float(np.log(x[0])),
                    in_dom=lambda x: bool(x[0] > 0))
    assert B.in_dom_interior([1.0]) and not B.in_dom_interior([-1.0])
    assert B([2.0])[0] == -0.5


def _graph_points(A, rng, n=200):
    pts = []
    while len(pts) < n:
        x = rng.uniform(-2, 2, A.dim)
        if isinstance(A, NormalConeSimplex):
            x = np.abs(x)
            x[rng.integers(A.dim)] = 0.0
            x /= x.sum()
        if isinstance(A, NormalConeBox):
            x = np.clip(x, -1.0, 1.0)
        if isinstance(A, NormalConeHalfspace):
            x = x - max(0.0, float(np.dot(A.a, x) - A.b)) * A.a / np.dot(A.a, A.a)
        if not A.in_domain(x):
            continue
        pts.append((x, A.selection(x)))
    return pts


@pytest.mark.parametrize("A", [
    ZeroOperator(2),
    LinearOperator([[1.0, 1.0], [-1.0, 1.0]], [0.5, 0.0]),
    L1Subdifferential(0.7, 2),
    NormalConeBox(-1.0, 1.0, 2),
    NormalConeSimplex(3),
    NormalConeHalfspace([1.0, 2.0], 0.5),
], ids=["zero", "linear", "l1", "box", "simplex", "halfspace"])
def test_set_valued_graph_monotone(A):
    rng = np.random.default_rng(1)
    pts = _graph_points(A, rng)
    for (x, xs), (y, ys) in zip(pts, pts[1:]):
        assert A.member(x, xs)
        assert np.dot(xs - ys, x - y) >= -1e-10


def test_l1_membership():
    A = L1Subdifferential(1.0, 1)
    assert A.member([1.0], [1.0]) and not A.member([1.0], [0.5])
    assert A.member([0.0], [0.3]) and not A.member([0.0], [1.5])
    assert A.is_subdifferential and A.potential([-2.0]) == 2.0


def test_normal_cone_membership():
    K = NormalConeBox(0.0, math.inf, 1)
    assert K.member([0.0], [-3.0]) and not K.member([0.0], [3.0])
    assert K.member([2.0], [0.0]) and not K.in_domain([-1.0])
    S = NormalConeSimplex(2)
    assert S.member([1.0, 0.0], [0.0, -1.0]) and not S.member([0.5, 0.5], [1.0, 0.0])
    H = NormalConeHalfspace([1.0], 1.0)
    assert H.member([1.0], [2.0]) and not H.member([0.0], [2.0])


def test_relation_rejects_decreasing_terms():
    with pytest.raises(ContractError):
        ScalarRelation(slope_m=-1.0)
    with pytest.raises(ContractError):
        ScalarRelation(lo=1.0, hi=0.0)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.0, 3.0), st.floats(-2.0, 2.0), st.floats(0.0, 2.0), st.floats(0.01, 3.0),
       st.lists(st.floats(0.05, 5.0), min_size=2, max_size=2))
def test_relation_bounds_monotone(m, c0, w, r, ts):
    rel = ScalarRelation(signs=((1.0, 1.0),), slope_m=m, offset=c0, inv_w=w, inv_r=r)
    s, t = sorted(ts)
    lo_s, hi_s = rel.bounds(s)
    lo_t, hi_t = rel.bounds(t)
    assert lo_s <= hi_s and lo_t <= hi_t
    if s < t:
        assert hi_s <= lo_t + 1e-12


def test_separable_spec_round_trip():
    rel = ScalarRelation(signs=((1.0, 1.0),), inv_w=1.0, inv_r=1.0)
    assert ScalarRelation.from_spec(rel.spec()) == rel
    A = SeparableOperator([ScalarRelation(), rel])
    assert A.dim == 2 and A.separable
