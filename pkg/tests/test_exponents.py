from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from walshbiest.exponents import (A_VERTICES, AdmissibleTuple, Membership, NotAdmissible,
                                  NotOnHyperplane, ThetaOutOfRange, as_fraction, classify_by_facets,
                                  facets, in_D, swap13, theta_map, vertices_D_doubleprime,
                                  vertices_D_prime)

H = Fraction(1, 2)
F = Fraction


def test_vertex_table():
    A = vertices_D_prime().vertices
    B = vertices_D_doubleprime().vertices
    assert len(A) == len(B) == 12
    assert A[0] == (1, H, 1, -3 * H)
    assert A[4] == (1, -H, 0, H)
    assert A[8] == (-H, 1, 0, H)
    assert B[1] == (1, 1, H, -3 * H)
    assert all(sum(v) == 1 for v in A + B)


def test_named_points():
    assert in_D((H, H, H, -H)) is Membership.INTERIOR
    assert in_D((F(1, 4),) * 4) is Membership.INTERIOR
    for v in A_VERTICES:
        assert in_D(v, "D'") is Membership.BOUNDARY
        assert in_D(swap13(v), "D''") is Membership.BOUNDARY


def test_far_point_outside():
    assert in_D((2, 0, 0, -1)) is Membership.OUTSIDE
    assert in_D((0, 0, 0, 1), "D'") is not Membership.OUTSIDE


def test_float_input_is_exact():
    assert as_fraction(0.8) == F(4, 5)
    assert in_D((0.5, 0.5, 0.5, -0.5)) is Membership.INTERIOR


def test_not_on_hyperplane():
    with pytest.raises(NotOnHyperplane):
        in_D((1, 1, 1, 1))
    with pytest.raises(ValueError):
        in_D((H, H, H, -H), "E")


def test_facet_count_and_vertices_tight():
    fs = facets(A_VERTICES)
    assert len(fs) >= 4
    for v in A_VERTICES:
        # each vertex lies on at least three facets
        assert sum(sum(n[i] * v[i] for i in range(3)) == c for n, c in fs) >= 3


def _coord():
    return st.fractions(min_value=-2, max_value=2, max_denominator=16)


@given(_coord(), _coord(), _coord())
def test_simplex_cover_matches_facets(a1, a2, a3):
    alpha = (a1, a2, a3, 1 - a1 - a2 - a3)
    for name, verts in (("D'", A_VERTICES), ("D''", vertices_D_doubleprime().vertices)):
        assert in_D(alpha, name) is classify_by_facets(alpha, verts)


@given(_coord(), _coord(), _coord())
def test_swap_symmetry_and_intersection(a1, a2, a3):
    alpha = (a1, a2, a3, 1 - a1 - a2 - a3)
    m1, m2 = in_D(alpha, "D'"), in_D(alpha, "D''")
    assert m1 is in_D(swap13(alpha), "D''")
    m = in_D(alpha)
    if Membership.OUTSIDE in (m1, m2):
        assert m is Membership.OUTSIDE
    elif m1 is m2 is Membership.INTERIOR:
        assert m is Membership.INTERIOR
    else:
        assert m is Membership.BOUNDARY


def test_admissible_tuple():
    t = AdmissibleTuple((H, H, H, -H))
    assert t.bad_index == 4 and len(t) == 4
    assert AdmissibleTuple((F(1, 4),) * 4).bad_index is None
    with pytest.raises(NotAdmissible):
        AdmissibleTuple((1, 0, 0, 0))
    with pytest.raises(NotAdmissible):
        AdmissibleTuple((H, H, H, H))
    with pytest.raises(NotAdmissible):
        AdmissibleTuple((F(3, 4), F(1, 2), -F(1, 8), -F(1, 8)))   # two negatives
    with pytest.raises(NotAdmissible):
        AdmissibleTuple((F(1, 4), 1, -F(1, 8), -F(1, 8)))


def test_theta_bht_examples():
    with pytest.raises(ThetaOutOfRange):
        theta_map((0.9, 0.45, -0.35), "bht")
    p = theta_map((0.8, 0.55, -0.35), "bht")
    assert p.triple == (F(3, 5), F(1, 10), F(3, 10))
    assert p.theta is None


def test_theta_a9_example():
    p = theta_map((-0.45, 0.95, 0.05, 0.45), "A9-A12")
    assert p.triple == (F(1, 10), F(9, 10), 0)
    assert p.theta == F(9, 10)


def test_theta_bad_regime_and_arity():
    with pytest.raises(ValueError):
        theta_map((H, H, H, -H), "A5")
    with pytest.raises(ValueError):
        theta_map((H, H, 0), "A1-A2")
    with pytest.raises(ValueError):
        theta_map((H, H, H, -H), "bht")


@given(st.fractions(-2, 2, max_denominator=32), st.fractions(-2, 2, max_denominator=32),
       st.fractions(-2, 2, max_denominator=32))
def test_theta_sum_identity(a1, a2, a3):
    # the three substitutions always sum to one on the hyperplane
    a4 = 1 - a1 - a2 - a3
    s = a3 + a4
    assert (2 * a1 + 1) + (2 * a2 - 1) + (2 * s - 1) == 1
    assert (2 * a1 - 1) + (2 * a2 - 1) + (2 * s + 1) == 1
    b3 = 1 - a1 - a2
    assert (2 * a1 - 1) + (2 * a2 - 1) + (2 * b3 + 1) == 1


# directions along which the constraints hold arbitrarily close to each vertex
APPROACH = {
    "A9-A12": [(8, (0, -2, 1, 1)), (9, (1, -1, -1, 1)), (10, (1, 0, -2, 1)), (11, (1, 0, 1, -2))],
    "A1-A2": [(0, (-1, 0, -3, 4)), (1, (0, -1, -3, 4))],
}


@pytest.mark.parametrize("regime", sorted(APPROACH))
def test_theta_near_vertices(regime):
    for idx, d in APPROACH[regime]:
        v = A_VERTICES[idx]
        assert sum(d) == 0
        for m in range(4, 30, 5):
            eps = F(1, 2 ** m)
            alpha = tuple(x + eps * y for x, y in zip(v, d))
            AdmissibleTuple(alpha)
            p = theta_map(AdmissibleTuple(alpha), regime)
            assert sum(p.triple) == 1
            assert 0 < p.theta < 1
        # at the vertex itself some constraint is tight
        with pytest.raises(ThetaOutOfRange):
            theta_map(v, regime)
