import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.spatial import ConvexHull

from amlab.polytope import Polytope


def test_hull_kinds():
    assert Polytope.hull([[0.0, 0.0], [0.0, 0.0]]).dim == 0
    seg = Polytope.hull([[0, 0], [1, 1], [2, 2], [0.5, 0.5]])
    assert seg.dim == 1 and seg.to_list() == [[0.0, 0.0], [2.0, 2.0]]
    tri = Polytope.hull([[0, 0], [1, 0], [0, 1], [0.2, 0.2]])
    assert tri.dim == 2 and len(tri) == 3
    with pytest.raises(ValueError):
        Polytope.hull(np.zeros((0, 2)))


@given(st.integers(0, 10_000))
def test_hull_matches_qhull(seed):
    rng = np.random.default_rng(seed)
    P = rng.normal(size=(rng.integers(3, 30), 2))
    ours = Polytope.hull(P)
    ref = P[ConvexHull(P).vertices]
    assert len(ours) == len(ref)
    assert all(np.min(np.abs(ours.vertices - r).max(axis=1)) < 1e-12 for r in ref)


@given(st.integers(0, 10_000))
def test_intersection_membership_oracle(seed):
    rng = np.random.default_rng(seed)
    A = Polytope.hull(rng.uniform(-1, 1, (6, 2)))
    B = Polytope.hull(rng.uniform(-1, 1, (6, 2)) + rng.uniform(-0.5, 0.5, 2))
    C = A.intersect(B)
    X = rng.uniform(-1.5, 1.5, (400, 2))
    inside = np.array([A.contains_point(x, -1e-6) and B.contains_point(x, -1e-6) for x in X])
    outside = np.array([not A.contains_point(x, 1e-6) or not B.contains_point(x, 1e-6) for x in X])
    if C is None:
        assert not inside.any()
        return
    assert all(C.contains_point(x) for x in X[inside])
    assert not any(C.contains_point(x, -1e-9) for x in X[outside])


def test_intersection_1d_and_empty():
    a = Polytope([[0.0], [2.0]])
    b = Polytope([[1.0], [3.0]])
    assert a.intersect(b).equals(Polytope([[1.0], [2.0]]))
    assert a.intersect(Polytope([[5.0], [6.0]])) is None


def test_relint_and_containment():
    sq = Polytope.hull([[0, 0], [1, 0], [1, 1], [0, 1]])
    assert sq.in_relint([0.5, 0.5]) and not sq.in_relint([1.0, 0.5])
    seg = Polytope([[0.0, 0.0], [1.0, 0.0]])
    assert seg.in_relint([0.5, 0.0]) and not seg.in_relint([0.5, 0.1])
    assert sq.contains(seg) and not seg.contains(sq)
    assert np.allclose(sq.barycenter, [0.5, 0.5])
