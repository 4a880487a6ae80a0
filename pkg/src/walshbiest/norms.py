"""Size and energy of coefficient sequences, and the quantities bounding them.

``size`` is a sup over trees.  Member sums only grow when a tree is enlarged,
so it suffices to scan maximal trees over a finite list of candidate tops
(see :func:`candidate_tops`).  ``energy`` is a maximum-weight family of
pairwise disjoint tiles, computed exactly by a split recursion over dyadic
phase-plane rectangles; a min-cut formulation gives an independent float
cross-check.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import networkx as nx
import numpy as np

from .dyadic import ZERO, DyadicInterval, ExactScalar, common_ancestor
from .operators import CoeffSeq, ancestor_pairs
from .phaseplane import Quartile, Tile, Tree, canonical, subtile
from .walsh import MeasSet, weak_l1_of_cells


class BadTheta(ValueError):
    pass


def _sqrt(v) -> float:
    return math.sqrt(max(float(v), 0.0))


def _zero(exact: bool):
    return ZERO if exact else 0.0


# ---------------------------------------------------------------------------
# size


def _valid_top_freq(lo: int, d: int, i: int) -> int | None:
    """Smallest ``t`` in ``[lo*2^d, (lo+1)*2^d)`` with ``t = i-1 (mod 4)``."""
    start = lo << d
    t = start + ((i - 1 - start) % 4)
    return t if t < ((lo + 1) << d) else None


def candidate_tops(coll: Sequence[Quartile], i: int) -> set[tuple[int, int, int]]:
    """Tops ``(kT, nT, t)`` of the i-th sub-tile that dominate every i-tree.

    For any tree, replacing its top by the smallest admissible frequency in the
    range of its coarsest member gives a tree at least as large with the same
    time interval, and tops more than two levels above the common ancestor of
    the members never help.
    """
    if not coll:
        return set()
    kca = -common_ancestor([P.time for P in coll]).scale
    tops = set()
    for P in coll:
        s = 4 * P.l + i - 1
        for kT in range(P.k, kca - 3, -1):
            d = P.k - kT
            t = _valid_top_freq(s, d, i)
            if t is not None:
                tops.add((kT, P.n >> d, t))
    return tops


class _TreeIndex:
    """Prefix sums of squared coefficients grouped by (scale, i-frequency)."""

    def __init__(self, coll: Sequence[Quartile], sq: Mapping[Quartile, object], i: int, exact: bool):
        groups: dict[tuple[int, int], list[tuple[int, Quartile]]] = {}
        for P in coll:
            groups.setdefault((P.k, 4 * P.l + i - 1), []).append((P.n, P))
        self.exact = exact
        self.kmax = max((P.k for P in coll), default=0)
        self.groups = {}
        for key, items in groups.items():
            items.sort(key=lambda it: it[0])
            cum = [_zero(exact)]
            for _, P in items:
                cum.append(cum[-1] + sq[P])
            self.groups[key] = ([n for n, _ in items], cum, [P for _, P in items])

    def _ranges(self, kT: int, nT: int, t: int):
        for d in range(0, self.kmax - kT + 1):
            g = self.groups.get((kT + d, t >> d))
            if g is None:
                continue
            ns = g[0]
            lo = bisect_left(ns, nT << d)
            hi = bisect_left(ns, (nT + 1) << d)
            if hi > lo:
                yield g, lo, hi

    def total(self, kT: int, nT: int, t: int):
        s = _zero(self.exact)
        for g, lo, hi in self._ranges(kT, nT, t):
            s = s + (g[1][hi] - g[1][lo])
        return s

    def members(self, kT: int, nT: int, t: int) -> list[Quartile]:
        out = []
        for g, lo, hi in self._ranges(kT, nT, t):
            out.extend(g[2][lo:hi])
        return out


def _scale_by_length(v, kT: int, exact: bool):
    # divide by |I_T| = 2^-kT
    return v.scale2(kT) if exact else v * 2.0 ** kT


@dataclass
class SupResult:
    """A sup with its witness; ``square`` is exact when the input was."""

    square: object
    witness: object = None

    @property
    def value(self) -> float:
        return _sqrt(self.square)


def _squares(coll, a: CoeffSeq) -> dict:
    return {P: a.square(P) for P in coll}


def size(coll: Iterable[Quartile], a: CoeffSeq, j: int | None = None) -> SupResult:
    """``sup_T (|I_T|^-1 sum_{P in T} |a_{P_j}|^2)^{1/2}`` over i-trees, ``i != j``."""
    coll = canonical(coll)
    j = a.slot if j is None else j
    exact = a.exact
    best = SupResult(_zero(exact), None)
    if not coll:
        return best
    sq = _squares(coll, a)
    for i in (1, 2, 3):
        if i == j:
            continue
        idx = _TreeIndex(coll, sq, i, exact)
        for kT, nT, t in sorted(candidate_tops(coll, i)):
            v = _scale_by_length(idx.total(kT, nT, t), kT, exact)
            if v > best.square:
                top = Quartile(kT, nT, (t - (i - 1)) // 4)
                best = SupResult(v, (top, i))
    if best.witness is not None:
        top, i = best.witness
        idx = _TreeIndex(coll, sq, i, exact)
        best.witness = Tree(frozenset(idx.members(top.k, top.n, 4 * top.l + i - 1)), top, i)
    return best


def tree_value(T: Tree, a: CoeffSeq):
    """``|I_T|^-1 sum_{P in T} |a_{P_j}|^2`` (the squared size of one tree)."""
    s = _zero(a.exact)
    for P in T.members:
        s = s + a.square(P)
    return _scale_by_length(s, T.top.k, a.exact)


def size_bruteforce(coll: Sequence[Quartile], a: CoeffSeq, j: int | None = None):
    """Exponential oracle: every subset, every admissible tree kind, best top."""
    coll = canonical(coll)
    j = a.slot if j is None else j
    sq = [a.square(P) for P in coll]
    best = _zero(a.exact)
    n = len(coll)
    for mask in range(1, 1 << n):
        members = [x for x in range(n) if mask >> x & 1]
        ca = common_ancestor([coll[x].time for x in members])
        total = _zero(a.exact)
        for x in members:
            total = total + sq[x]
        for i in (1, 2, 3):
            if i == j:
                continue
            kT = _best_top_scale([subtile(coll[x], i) for x in members], -ca.scale, i)
            if kT is not None:
                v = _scale_by_length(total, kT, a.exact)
                if v > best:
                    best = v
    return best


def _best_top_scale(tiles: list[Tile], kca: int, i: int) -> int | None:
    """Finest scale at which a quartile top dominates all ``tiles``."""
    # the frequency intervals must form a chain; the top sits inside the narrowest
    narrow = min(tiles, key=lambda t: t.k)
    for t in tiles:
        if (narrow.l >> (t.k - narrow.k)) != t.l:
            return None
    for kT in range(kca, kca - 3, -1):
        if _valid_top_freq(narrow.l, narrow.k - kT, i) is not None:
            return kT
    return None


# ---------------------------------------------------------------------------
# energy


def energy(coll: Iterable[Quartile], a: CoeffSeq, j: int | None = None) -> SupResult:
    """``sup_D (sum_{P in D} |a_{P_j}|^2)^{1/2}`` over families with disjoint ``P_j``."""
    coll = canonical(coll)
    j = a.slot if j is None else j
    exact = a.exact
    weights = {}
    for P in coll:
        w = a.square(P)
        if w > _zero(exact):
            weights[subtile(P, j)] = (w, P)
    if not weights:
        return SupResult(_zero(exact), [])
    if len(weights) > 20000:
        return energy_mincut(coll, a, j)
    value, chosen = _phase_plane_dp(weights, exact)
    return SupResult(value, canonical(weights[t][1] for t in chosen))


def _phase_plane_dp(weights: Mapping[Tile, tuple], exact: bool):
    """Max-weight disjoint tiles inside the smallest dyadic rectangle holding all.

    A disjoint family inside a rectangle of area > 1 cannot hold both a tile
    spanning the full time interval and one spanning the full frequency
    interval, so the optimum splits in time or in frequency.
    """
    tiles = list(weights)
    T = common_ancestor([t.time for t in tiles])
    F = common_ancestor([t.freq for t in tiles])
    # integer coordinates: time scale a, freq scale b (interval scales)
    memo: dict = {}

    def inside(ts, I: DyadicInterval, w: DyadicInterval):
        return [t for t in ts if I.contains(t.time) and w.contains(t.freq)]

    def best(I: DyadicInterval, w: DyadicInterval, ts: list[Tile]):
        if not ts:
            return _zero(exact), ()
        key = (I.scale, I.index, w.scale, w.index)
        hit = memo.get(key)
        if hit is not None:
            return hit
        if I.scale + w.scale == 0:
            res = (weights[ts[0]][0], (ts[0],))
        else:
            options = []
            # split in time: tiles with shorter time intervals
            short = [t for t in ts if -t.k < I.scale]
            a, b = I.children()
            va, ca = best(a, w, inside(short, a, w))
            vb, cb = best(b, w, inside(short, b, w))
            options.append((va + vb, ca + cb))
            # split in frequency: tiles with narrower frequency intervals
            narrow = [t for t in ts if t.k < w.scale]
            a, b = w.children()
            va, ca = best(I, a, inside(narrow, I, a))
            vb, cb = best(I, b, inside(narrow, I, b))
            options.append((va + vb, ca + cb))
            res = options[0] if not options[1][0] > options[0][0] else options[1]
        memo[key] = res
        return res

    # enlarge to a rectangle of area >= 1
    while T.scale + F.scale < 0:
        F = F.parent()
    return best(T, F, tiles)


def energy_mincut(coll: Iterable[Quartile], a: CoeffSeq, j: int | None = None) -> SupResult:
    """Float energy via maximum-weight antichain = total - min cut."""
    coll = canonical(coll)
    j = a.slot if j is None else j
    tiles, ws, owners = [], [], []
    for P in coll:
        w = float(a.square(P))
        if w > 0:
            tiles.append(subtile(P, j))
            ws.append(w)
            owners.append(P)
    if not tiles:
        return SupResult(0.0, [])
    G = nx.DiGraph()
    for u, w in enumerate(ws):
        G.add_edge("s", ("x", u), capacity=w)
        G.add_edge(("y", u), "t", capacity=w)
    for lo, hi in ancestor_pairs(tiles, tiles):
        if lo != hi:
            G.add_edge(("x", lo), ("y", hi))  # infinite capacity
    cut, (S, _) = nx.minimum_cut(G, "s", "t")
    chosen = [owners[u] for u in range(len(tiles)) if ("x", u) in S and ("y", u) not in S]
    return SupResult(sum(ws) - cut, canonical(chosen))


def energy_bruteforce(coll: Sequence[Quartile], a: CoeffSeq, j: int | None = None):
    coll = canonical(coll)
    j = a.slot if j is None else j
    tiles = [subtile(P, j) for P in coll]
    sq = [a.square(P) for P in coll]
    n = len(coll)
    clash = [[False] * n for _ in range(n)]
    from .phaseplane import tiles_intersect
    for x in range(n):
        for y in range(x + 1, n):
            clash[x][y] = clash[y][x] = tiles_intersect(tiles[x], tiles[y])
    best = _zero(a.exact)
    for mask in range(1, 1 << n):
        members = [x for x in range(n) if mask >> x & 1]
        if any(clash[x][y] for x in members for y in members if x < y):
            continue
        total = _zero(a.exact)
        for x in members:
            total = total + sq[x]
        if total > best:
            best = total
    return best


def family_value(D: Iterable[Quartile], a: CoeffSeq):
    s = _zero(a.exact)
    for P in D:
        s = s + a.square(P)
    return s


# ---------------------------------------------------------------------------
# John-Nirenberg weak size


def tree_weak_norm(members: Iterable[Quartile], sq: Mapping[Quartile, object]) -> float:
    """``||(sum_P |a_P|^2 chi_{I_P}/|I_P|)^{1/2}||_{L^{1,inf}}`` for one tree."""
    dens: dict[DyadicInterval, float] = {}
    for P in members:
        w = float(sq[P])
        if w > 0:
            dens[P.time] = dens.get(P.time, 0.0) + w * 2.0 ** P.k
    if not dens:
        return 0.0
    ivs = sorted(dens, key=lambda I: -I.scale)
    top_scale = ivs[0].scale
    # nearest member interval strictly above each member interval
    parent: dict[DyadicInterval, DyadicInterval] = {}
    for I in ivs:
        anc = I.parent()
        while anc.scale <= top_scale:
            if anc in dens:
                parent[I] = anc
                break
            anc = anc.parent()
    total: dict[DyadicInterval, float] = {}
    covered = {I: 0.0 for I in ivs}
    for I in ivs:
        up = parent.get(I)
        total[I] = dens[I] + (total[up] if up is not None else 0.0)
        if up is not None:
            covered[up] += float(I.length)
    # atom of I: the part of I outside the finer member intervals below it
    vals = np.array([math.sqrt(total[I]) for I in ivs])
    meas = np.array([float(I.length) - covered[I] for I in ivs])
    order = np.argsort(-vals, kind="stable")
    vals, meas = vals[order], meas[order]
    cum = np.cumsum(meas)
    # just below a value the level set holds every atom with value >= it
    last = np.searchsorted(-vals, -vals, side="right") - 1
    return float(np.max(vals * cum[last]))


def jn_weak_size(coll: Iterable[Quartile], a: CoeffSeq, j: int | None = None) -> SupResult:
    """Sup over trees of ``|I_T|^-1`` times the weak-L1 norm of the square function."""
    coll = canonical(coll)
    j = a.slot if j is None else j
    best, witness = 0.0, None
    if not coll:
        return SupResult(0.0, None)
    sq = _squares(coll, a)
    fsq = {P: float(v) for P, v in sq.items()}
    for i in (1, 2, 3):
        if i == j:
            continue
        idx = _TreeIndex(coll, fsq, i, False)
        for kT, nT, t in sorted(candidate_tops(coll, i)):
            members = idx.members(kT, nT, t)
            v = tree_weak_norm(members, fsq) * 2.0 ** kT
            if v > best:
                best = v
                witness = Tree(frozenset(members), Quartile(kT, nT, (t - (i - 1)) // 4), i)
    return SupResult(best * best, witness)


def weak_norm_on_cells(members: Iterable[Quartile], sq: Mapping[Quartile, object], top: DyadicInterval,
                       K: int) -> float:
    """Same quantity as :func:`tree_weak_norm`, by sampling on cells of ``top``."""
    n = 1 << (top.scale + K)
    g = np.zeros(n)
    for P in members:
        lo = (P.n << (K - P.k)) - (top.index << (top.scale + K))
        hi = lo + (1 << (K - P.k))
        g[lo:hi] += float(sq[P]) * 2.0 ** P.k
    return weak_l1_of_cells(np.sqrt(g), 2.0 ** -K)


# ---------------------------------------------------------------------------
# composite bounds


def check_theta(theta: Sequence) -> tuple:
    th = tuple(Fraction(x).limit_denominator(10**12) if isinstance(x, float) else Fraction(x)
               for x in theta)
    if len(th) != 3 or any(x < 0 or x >= 1 for x in th) or sum(th) != 1:
        raise BadTheta(f"need 0 <= theta_j < 1 summing to 1, got {theta}")
    return th


@dataclass
class NormReport:
    sizes: dict = field(default_factory=dict)
    energies: dict = field(default_factory=dict)

    def size(self, j: int) -> float:
        return self.sizes[j].value

    def energy(self, j: int) -> float:
        return self.energies[j].value

    def to_json(self) -> dict:
        out = {}
        for j in sorted(self.sizes):
            s, e = self.sizes[j], self.energies[j]
            out[str(j)] = {
                "size": s.value,
                "size_square": _json_num(s.square),
                "size_witness": s.witness.to_json() if s.witness is not None else None,
                "energy": e.value,
                "energy_square": _json_num(e.square),
                "energy_witness": [P.to_json() for P in (e.witness or [])],
            }
        return out


def _json_num(v):
    return v.to_json() if isinstance(v, ExactScalar) else float(v)


def norm_report(coll, seqs: Sequence[CoeffSeq]) -> NormReport:
    rep = NormReport()
    for a in seqs:
        rep.sizes[a.slot] = size(coll, a)
        rep.energies[a.slot] = energy(coll, a)
    return rep


def abstract_rhs(coll, a1: CoeffSeq, a2: CoeffSeq, a3: CoeffSeq, theta, report: NormReport | None = None
                 ) -> float:
    """``prod_j size_j^theta_j energy_j^(1-theta_j)``."""
    th = check_theta(theta)
    report = report or norm_report(coll, [a1, a2, a3])
    out = 1.0
    for j, t in zip((1, 2, 3), th):
        s, e = report.size(j), report.energy(j)
        out *= (s ** float(t) if t else 1.0) * (e ** float(1 - t))
    return out


def trilinear_sum(coll, a1: CoeffSeq, a2: CoeffSeq, a3: CoeffSeq):
    """``sum_P |I_P|^{-1/2} a1 a2 a3``."""
    from .operators import rightform_sum
    return rightform_sum(coll, a1.with_slot(1), a2.with_slot(2), a3.with_slot(3))


# ---------------------------------------------------------------------------
# right-hand sides of the size and energy lemmas


@dataclass
class LemmaRHS:
    densities_P: dict
    densities_Q: dict
    bht_energy: float | None = None
    bht_energy_2: float | None = None
    bht_size: float | None = None

    def to_json(self) -> dict:
        return {
            "densities_P": {str(j): str(v) for j, v in self.densities_P.items()},
            "densities_Q": {str(j): str(v) for j, v in self.densities_Q.items()},
            "bht_energy": self.bht_energy,
            "bht_energy_2": self.bht_energy_2,
            "bht_size": self.bht_size,
        }


def sup_density(E: MeasSet, coll: Iterable[Quartile]) -> Fraction:
    """``sup_P |E cap I_P| / |I_P|`` as an exact rational (0 for empty ``coll``)."""
    return max((E.density(P.time) for P in coll), default=Fraction(0))


def lemma_rhs_bounds(E_sets: Mapping[int, MeasSet], P_coll, Q_coll=(), theta=None) -> LemmaRHS:
    P_coll, Q_coll = list(P_coll), list(Q_coll)
    dP = {j: sup_density(E, P_coll) for j, E in E_sets.items()}
    dQ = {j: sup_density(E, Q_coll) for j, E in E_sets.items()}
    rhs = LemmaRHS(dP, dQ)
    if theta is None:
        return rhs
    th = float(theta)
    if not 0 < th < 1:
        raise BadTheta(f"need 0 < theta < 1, got {theta}")
    if 3 in E_sets and 4 in E_sets:
        m3, m4 = float(E_sets[3].measure), float(E_sets[4].measure)
        rhs.bht_energy = m3 ** ((1 - th) / 2) * m4 ** (th / 2)
        rhs.bht_energy_2 = (m4 ** 0.5 * float(dP[3])) ** (1 - th) * (m3 ** 0.5 * float(dP[4])) ** th
        rhs.bht_size = max((float(E_sets[3].density(Q.time)) ** (1 - th)
                            * float(E_sets[4].density(Q.time)) ** th for Q in Q_coll), default=0.0)
    return rhs
