"""Admissible exponent tuples, the polytope D = D' & D'' and the theta maps.

Membership is decided exactly in integer arithmetic.  The hull is covered by
the simplices spanned by its vertices, so a point is inside iff one of them
holds it with non-negative barycentric weights, and interior iff in addition a
short step away from the vertex centroid stays in such a simplex.  An
independent facet enumeration is kept for cross-checking.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from typing import Sequence

import numpy as np

H = Fraction(1, 2)

A_VERTICES: tuple[tuple[Fraction, ...], ...] = tuple(
    tuple(Fraction(x) for x in v) for v in (
        (1, H, 1, -3 * H), (H, 1, 1, -3 * H), (H, 1, -3 * H, 1), (1, H, -3 * H, 1),
        (1, -H, 0, H), (1, -H, H, 0), (H, -H, 0, 1), (H, -H, 1, 0),
        (-H, 1, 0, H), (-H, 1, H, 0), (-H, H, 1, 0), (-H, H, 0, 1),
    )
)


class NotOnHyperplane(ValueError):
    pass


class ThetaOutOfRange(ValueError):
    pass


class NotAdmissible(ValueError):
    pass


class Membership(str, enum.Enum):
    INTERIOR = "interior"
    BOUNDARY = "boundary"
    OUTSIDE = "outside"


def as_fraction(x) -> Fraction:
    """Exact rational from int, Fraction, decimal string or float (by its repr)."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(x)


def swap13(v: Sequence) -> tuple:
    return (v[2], v[1], v[0], *v[3:])


@dataclass(frozen=True)
class Polytope:
    name: str
    vertices: tuple

    def to_json(self) -> dict:
        return {"name": self.name, "vertices": [[str(x) for x in v] for v in self.vertices]}


def vertices_D_prime() -> Polytope:
    return Polytope("D'", A_VERTICES)


def vertices_D_doubleprime() -> Polytope:
    return Polytope("D''", tuple(swap13(v) for v in A_VERTICES))


@dataclass(frozen=True)
class AdmissibleTuple:
    alpha: tuple

    def __post_init__(self):
        a = tuple(as_fraction(x) for x in self.alpha)
        object.__setattr__(self, "alpha", a)
        if sum(a) != 1:
            raise NotAdmissible(f"coordinates sum to {sum(a)}, not 1")
        if any(x >= 1 for x in a):
            raise NotAdmissible("every coordinate must be below 1")
        if sum(1 for x in a if x < 0) > 1:
            raise NotAdmissible("at most one coordinate may be negative")

    @property
    def bad_index(self) -> int | None:
        """1-based index of the negative coordinate, if any."""
        for idx, x in enumerate(self.alpha, 1):
            if x < 0:
                return idx
        return None

    def __len__(self) -> int:
        return len(self.alpha)


# ---------------------------------------------------------------------------
# membership


def _check_point(alpha) -> tuple[Fraction, ...]:
    a = tuple(as_fraction(x) for x in alpha)
    if len(a) != 4:
        raise ValueError("expected four coordinates")
    if sum(a) != 1:
        raise NotOnHyperplane(f"coordinates sum to {sum(a)}, not 1")
    return a


def _adj_det(m: list[list[int]]) -> tuple[list[list[int]], int]:
    """Adjugate and determinant of an integer square matrix."""
    n = len(m)
    a = [[Fraction(x) for x in row] + [Fraction(int(r == c)) for c in range(n)] for r, row in enumerate(m)]
    det = Fraction(1)
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r][col] != 0), None)
        if piv is None:
            return [], 0
        if piv != col:
            a[col], a[piv] = a[piv], a[col]
            det = -det
        det *= a[col][col]
        inv = a[col][col]
        a[col] = [x / inv for x in a[col]]
        for r in range(n):
            if r != col and a[r][col] != 0:
                f = a[r][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
    return [[int(x * det) for x in row[n:]] for row in a], int(det)


@lru_cache(maxsize=8)
def _simplices(vertices: tuple):
    """Sign-normalised adjugates of all non-degenerate vertex simplices.

    Vertices live on ``sum = 1`` so their first three coordinates determine
    them.  ``adj @ (L p, L)`` has the signs of the barycentric weights of ``p``
    for any positive ``L``.
    """
    scale = math.lcm(*(x.denominator for v in vertices for x in v[:3]))
    pts = [[int(x * scale) for x in v[:3]] for v in vertices]
    mats = []
    for quad in combinations(range(len(pts)), 4):
        m = [[pts[q][r] for q in quad] for r in range(3)] + [[scale] * 4]
        adj, det = _adj_det(m)
        if det:
            sgn = 1 if det > 0 else -1
            mats.append([[x * sgn for x in row] for row in adj])
    centroid = tuple(sum(v[r] for v in vertices) / len(vertices) for r in range(3))
    return np.array(mats, dtype=object), centroid


def _classify_hull(alpha, vertices) -> Membership:
    adj, c = _simplices(tuple(tuple(Fraction(x) for x in v) for v in vertices))
    x = alpha[:3]
    L = math.lcm(*(q.denominator for q in (*x, *c)))
    X = np.array([int(q * L) for q in x] + [L], dtype=object)
    D = np.array([int((q - cq) * L) for q, cq in zip(x, c)] + [0], dtype=object)
    lam = adj @ X            # barycentric weights of x, positively scaled
    slope = adj @ D          # their rate of change moving away from the centroid
    inside = np.all(lam >= 0, axis=1)
    if not inside.any():
        return Membership.OUTSIDE
    if not any(D[:3]):
        return Membership.INTERIOR
    forward = np.all((lam > 0) | (slope >= 0), axis=1)
    return Membership.INTERIOR if np.any(inside & forward) else Membership.BOUNDARY


def in_D(alpha, which: str = "D") -> Membership:
    """Classify ``alpha`` relative to D', D'' or their intersection D."""
    a = _check_point(alpha)
    if which in ("D'", "Dp", "D_prime"):
        return _classify_hull(a, A_VERTICES)
    if which in ("D''", "Dpp", "D_doubleprime"):
        return _classify_hull(a, vertices_D_doubleprime().vertices)
    if which != "D":
        raise ValueError(f"unknown region {which!r}")
    m1 = in_D(a, "D'")
    m2 = in_D(a, "D''")
    if Membership.OUTSIDE in (m1, m2):
        return Membership.OUTSIDE
    if m1 is Membership.INTERIOR and m2 is Membership.INTERIOR:
        return Membership.INTERIOR
    return Membership.BOUNDARY


# ---------------------------------------------------------------------------
# facets (cross-check)


def _det3(m) -> Fraction:
    return (m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]))


def facets(vertices) -> list[tuple[tuple[Fraction, ...], Fraction]]:
    return list(_facets(tuple(tuple(v) for v in vertices)))


@lru_cache(maxsize=8)
def _facets(vertices: tuple) -> tuple:
    """Facet inequalities ``n . x <= c`` of the hull, in coordinates 1..3 of S.

    The fourth coordinate is determined by the others on S, so the hull is a
    3-dimensional polytope in the first three coordinates.
    """
    pts = [tuple(v[:3]) for v in vertices]
    out = set()
    for p, q, r in combinations(pts, 3):
        u = [q[x] - p[x] for x in range(3)]
        w = [r[x] - p[x] for x in range(3)]
        nrm = (u[1] * w[2] - u[2] * w[1], u[2] * w[0] - u[0] * w[2], u[0] * w[1] - u[1] * w[0])
        if not any(nrm):
            continue
        c = sum(nrm[x] * p[x] for x in range(3))
        vals = [sum(nrm[x] * s[x] for x in range(3)) for s in pts]
        if all(v <= c for v in vals):
            pass
        elif all(v >= c for v in vals):
            nrm = tuple(-x for x in nrm)
            c = -c
        else:
            continue
        # normalise so facets found from different triples coincide
        scale = max(abs(x) for x in (*nrm, c) if x)
        out.add((tuple(x / scale for x in nrm), c / scale))
    return tuple(sorted(out))


def classify_by_facets(alpha, vertices) -> Membership:
    a = _check_point(alpha)
    x = a[:3]
    slack = [c - sum(n[i] * x[i] for i in range(3)) for n, c in facets(vertices)]
    if any(s < 0 for s in slack):
        return Membership.OUTSIDE
    return Membership.INTERIOR if all(s > 0 for s in slack) else Membership.BOUNDARY


# ---------------------------------------------------------------------------
# theta maps


@dataclass(frozen=True)
class ThetaParams:
    theta1: Fraction
    theta2: Fraction
    theta3: Fraction
    theta: Fraction | None = None

    @property
    def triple(self) -> tuple[Fraction, Fraction, Fraction]:
        return (self.theta1, self.theta2, self.theta3)

    def to_json(self) -> dict:
        d = {"theta1": str(self.theta1), "theta2": str(self.theta2), "theta3": str(self.theta3)}
        if self.theta is not None:
            d["theta"] = str(self.theta)
        return d


REGIMES = ("bht", "A9-A12", "A1-A2")


def theta_map(alpha, regime: str) -> ThetaParams:
    """Substitute ``alpha`` into the regime's theta formulas and validate the result."""
    a = alpha.alpha if isinstance(alpha, AdmissibleTuple) else tuple(as_fraction(x) for x in alpha)
    if regime == "bht":
        if len(a) != 3:
            raise ValueError("the bht regime takes three exponents")
        a1, a2, a3 = a
        p = ThetaParams(2 * a1 - 1, 2 * a2 - 1, 2 * a3 + 1)
    elif regime in ("A9-A12", "A1-A2"):
        if len(a) != 4:
            raise ValueError(f"the {regime} regime takes four exponents")
        a1, a2, a3, a4 = a
        s = a3 + a4
        if s == 0:
            raise ThetaOutOfRange("alpha_3 + alpha_4 vanishes")
        if regime == "A9-A12":
            p = ThetaParams(2 * a1 + 1, 2 * a2 - 1, 2 * s - 1, a4 / s)
        else:
            p = ThetaParams(2 * a1 - 1, 2 * a2 - 1, 2 * s + 1, (3 * a3 + 2 * a4) / s)
    else:
        raise ValueError(f"unknown regime {regime!r}; expected one of {REGIMES}")
    bad = [t for t in p.triple if not (0 <= t < 1)]
    if bad:
        raise ThetaOutOfRange(f"theta_j outside [0, 1): {[str(t) for t in p.triple]}")
    if sum(p.triple) != 1:
        raise ThetaOutOfRange(f"theta_j sum to {sum(p.triple)}")
    if p.theta is not None and not (0 < p.theta < 1):
        raise ThetaOutOfRange(f"theta = {p.theta} outside (0, 1)")
    return p
