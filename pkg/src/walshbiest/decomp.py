"""Tree estimate and the greedy size-halving tree selection.

``select_trees`` peels trees off a collection until every tree left has small
size.  A quartile ``P0`` triggers a selection when

    sum_{P in P'': P_i <= P0_i} |a_{P_j}|^2  >=  2^(-2n-3) * E^2 * |I_{P0}|

(``E`` the energy of the sequence).  The top is included in the sum; with the
top excluded a heavy singleton could never be removed and the halved size
bound would fail.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .dyadic import ONE, ExactScalar, half_power
from .norms import _TreeIndex, _zero, abstract_rhs, check_theta, energy, norm_report, size
from .operators import CoeffSeq
from .phaseplane import Quartile, Tree, canonical, subtile, tile_le, tile_lt

C_SEL = 64


class PreconditionViolated(ValueError):
    pass


# ---------------------------------------------------------------------------
# single tree


def trilinear_terms(coll, a1: CoeffSeq, a2: CoeffSeq, a3: CoeffSeq):
    exact = a1.exact and a2.exact and a3.exact
    total = _zero(exact)
    for P in canonical(coll):
        if exact:
            total = total + half_power(P.k) * a1[P] * a2[P] * a3[P]
        else:
            total += 2.0 ** (P.k / 2) * float(a1[P]) * float(a2[P]) * float(a3[P])
    return total


def tree_estimate(T: Tree, a1: CoeffSeq, a2: CoeffSeq, a3: CoeffSeq):
    """``(|sum_{P in T} |I_P|^-1/2 a1 a2 a3|, |I_T| prod_j size_j(T))``.

    Exact inputs give an exact lhs and the exact *square* of the rhs (the rhs
    involves square roots of sizes); use :func:`tree_estimate_holds` to compare.
    """
    lhs = abs(trilinear_terms(T.members, a1, a2, a3))
    if not T.members:
        return lhs, 0.0
    sizes = [size(T.members, a, j).value for a, j in ((a1, 1), (a2, 2), (a3, 3))]
    rhs = float(T.top.time.length) * sizes[0] * sizes[1] * sizes[2]
    return lhs, rhs


def tree_estimate_holds(T: Tree, a1: CoeffSeq, a2: CoeffSeq, a3: CoeffSeq) -> bool:
    """Exact check of ``lhs <= rhs`` via squares: ``lhs^2 <= |I_T|^2 prod size_j^2``."""
    lhs = abs(trilinear_terms(T.members, a1, a2, a3))
    if not T.members:
        return True
    sq = [size(T.members, a, j).square for a, j in ((a1, 1), (a2, 2), (a3, 3))]
    rhs_sq = sq[0] * sq[1] * sq[2]
    if isinstance(rhs_sq, ExactScalar):
        return lhs.square() <= rhs_sq.scale2(-2 * T.top.k)
    return float(lhs) ** 2 <= rhs_sq * 2.0 ** (-2 * T.top.k) * (1 + 1e-9)


# ---------------------------------------------------------------------------
# forests


@dataclass
class ForestTree:
    tree: Tree
    tag: str        # "T'" or "T''"
    i: int          # the index i != j of the selection
    parity: int     # scale parity of the sub-collection

    def to_json(self) -> dict:
        d = self.tree.to_json()
        d.update({"collection": self.tag, "i": self.i, "parity": self.parity})
        return d


@dataclass
class Forest:
    trees: list[ForestTree] = field(default_factory=list)
    residual: set = field(default_factory=set)
    tops: list = field(default_factory=list)   # replay log: (parity, i, top)

    def tree_lengths(self) -> Fraction:
        return sum((ft.tree.time_length for ft in self.trees), Fraction(0))

    def members(self) -> list[Quartile]:
        return [P for ft in self.trees for P in ft.tree.members]

    def to_json(self) -> dict:
        return {
            "trees": [ft.to_json() for ft in self.trees],
            "residual": [P.to_json() for P in canonical(self.residual)],
            "sum_tree_lengths": str(self.tree_lengths()),
        }

    def replay_log(self) -> list:
        return [[p, i, top.to_json()] for p, i, top in self.tops]


def _threshold(E2, n: int, P: Quartile, reading: str):
    # 2^(-2n-3) |I_P|, times E^2 in the normalised reading
    e = -2 * n - 3 - P.k
    base = E2 if reading == "normalized" else (ONE if isinstance(E2, ExactScalar) else 1.0)
    return base.scale2(e) if isinstance(base, ExactScalar) else float(base) * 2.0 ** e


def _candidates(Pdd: list[Quartile], sq: dict, i: int, n: int, E2, exact: bool, reading: str):
    idx = _TreeIndex(Pdd, sq, i, exact)
    return [P for P in Pdd
            if idx.total(P.k, P.n, 4 * P.l + i - 1) >= _threshold(E2, n, P, reading)]


def _pick(cands: list[Quartile], i: int, j: int) -> Quartile:
    """Maximal i-sub-tile, then extreme centre of omega_{P_i}, then smallest n, smallest k."""
    tiles = {P: subtile(P, i) for P in cands}
    maximal = [P for P in cands if not any(tile_lt(tiles[P], tiles[R]) for R in cands)]

    def centre(P):
        t = tiles[P]
        return Fraction(2) ** t.k * (2 * t.l + 1) / 2

    sign = -1 if i < j else 1
    return min(maximal, key=lambda P: (sign * centre(P), P.n, P.k))


def select_trees(coll: Iterable[Quartile], a: CoeffSeq, j: int, n: int, E2,
                 reading: str = "normalized", check: bool = True) -> Forest:
    """Split ``coll`` into selected trees and a residual with halved size.

    ``E2`` is the squared energy used in the threshold.
    """
    coll = canonical(coll)
    exact = a.exact
    if reading not in ("normalized", "printed"):
        raise ValueError(f"unknown threshold reading {reading!r}")
    if check and coll:
        s2 = size(coll, a, j).square
        bound = E2 if reading == "normalized" else (ONE if exact else 1.0)
        if not _le_scaled(s2, bound, n):
            raise PreconditionViolated(f"size_{j} exceeds 2^-{n} E on entry")
    sq = {P: a.square(P) for P in coll}
    forest = Forest()
    for parity in (0, 1):
        Pdd = [P for P in coll if P.k % 2 == parity]
        for i in (1, 2, 3):
            if i == j:
                continue
            while True:
                cands = _candidates(Pdd, sq, i, n, E2, exact, reading)
                if not cands:
                    break
                P0 = _pick(cands, i, j)
                ti = subtile(P0, i)
                t1 = frozenset(P for P in Pdd if tile_le(subtile(P, i), ti))
                Pdd = [P for P in Pdd if P not in t1]
                tj = subtile(P0, j)
                t2 = frozenset(P for P in Pdd if tile_le(subtile(P, j), tj))
                Pdd = [P for P in Pdd if P not in t2]
                forest.trees.append(ForestTree(Tree(t1, P0, i), "T'", i, parity))
                if t2:
                    forest.trees.append(ForestTree(Tree(t2, P0, j), "T''", i, parity))
                forest.tops.append((parity, i, P0))
        forest.residual.update(Pdd)
    return forest


def replay(coll: Iterable[Quartile], j: int, log: Sequence) -> Forest:
    """Rebuild a forest from its ordered list of tops."""
    coll = canonical(coll)
    pools = {p: [P for P in coll if P.k % 2 == p] for p in (0, 1)}
    forest = Forest()
    for parity, i, top in log:
        P0 = top if isinstance(top, Quartile) else Quartile.from_json(top)
        Pdd = pools[parity]
        t1 = frozenset(P for P in Pdd if tile_le(subtile(P, i), subtile(P0, i)))
        Pdd = [P for P in Pdd if P not in t1]
        t2 = frozenset(P for P in Pdd if tile_le(subtile(P, j), subtile(P0, j)))
        pools[parity] = [P for P in Pdd if P not in t2]
        forest.trees.append(ForestTree(Tree(t1, P0, i), "T'", i, parity))
        if t2:
            forest.trees.append(ForestTree(Tree(t2, P0, j), "T''", i, parity))
        forest.tops.append((parity, i, P0))
    forest.residual = set(pools[0]) | set(pools[1])
    return forest


def top_tiles_disjoint(forest: Forest, j: int) -> bool:
    """Within each ``T'_i`` (per parity) the tiles ``P_j`` of all members are disjoint."""
    from .operators import ancestor_pairs
    groups: dict[tuple[int, int], list] = {}
    for ft in forest.trees:
        if ft.tag == "T'":
            groups.setdefault((ft.parity, ft.i), []).extend(subtile(P, j) for P in ft.tree.members)
    for tiles in groups.values():
        if len(set(tiles)) != len(tiles):
            return False
        if any(a != b for a, b in ancestor_pairs(tiles, tiles)):
            return False
    return True


# ---------------------------------------------------------------------------
# full partition


def strip_zero(coll, seqs: Sequence[CoeffSeq]) -> list[Quartile]:
    return [P for P in canonical(coll) if all(a[P] for a in seqs)]


def _start_level(S2, E2) -> int:
    """Largest n with ``S_j <= 2^-n E_j`` for every slot (exact for exact inputs)."""
    n = None
    for s2, e2 in zip(S2, E2):
        if not s2:
            continue
        m = math.floor(0.5 * math.log2(float(e2) / float(s2)))
        # correct the float guess exactly
        while not _le_scaled(s2, e2, m):
            m -= 1
        while _le_scaled(s2, e2, m + 1):
            m += 1
        n = m if n is None else min(n, m)
    return 0 if n is None else n


def _le_scaled(s2, e2, n: int) -> bool:
    # s2 <= 2^(-2n) e2
    if isinstance(s2, ExactScalar):
        return s2 <= e2.scale2(-2 * n)
    return s2 <= e2 * 2.0 ** (-2 * n)


@dataclass
class Level:
    n: int
    members: list
    forests: dict  # j -> Forest

    def trees(self) -> list[ForestTree]:
        return [ft for j in (1, 2, 3) for ft in self.forests[j].trees]


@dataclass
class Partition:
    levels: list[Level]
    energies_sq: tuple
    sizes_sq: tuple
    stripped: list

    def to_json(self) -> dict:
        return {
            "levels": [{"n": L.n, "members": [P.to_json() for P in canonical(L.members)],
                        "trees": [ft.to_json() for ft in L.trees()],
                        "sum_tree_lengths": str(sum((ft.tree.time_length for ft in L.trees()), Fraction(0)))}
                       for L in self.levels],
            "energy": [math.sqrt(float(e)) for e in self.energies_sq],
            "size": [math.sqrt(float(s)) for s in self.sizes_sq],
        }


def full_partition(coll, a1: CoeffSeq, a2: CoeffSeq, a3: CoeffSeq, max_levels: int = 200) -> Partition:
    seqs = (a1.with_slot(1), a2.with_slot(2), a3.with_slot(3))
    base = strip_zero(coll, seqs)
    E2 = tuple(energy(base, a).square for a in seqs)
    S2 = tuple(size(base, a).square for a in seqs)
    n = _start_level(S2, E2)
    current = base
    levels = []
    while current and len(levels) < max_levels:
        forests = {}
        taken: list[Quartile] = []
        for j, a in zip((1, 2, 3), seqs):
            f = select_trees(current, a, j, n, E2[j - 1])
            forests[j] = f
            got = f.members()
            taken.extend(got)
            current = canonical(f.residual)
        levels.append(Level(n, taken, forests))
        n += 1
    if current:
        raise RuntimeError("partition did not terminate")
    return Partition(levels, E2, S2, base)


# ---------------------------------------------------------------------------
# chain of bounds


@dataclass
class BoundReport:
    lhs: float
    tree_sum: float           # sum over all trees of |tree sums|
    tree_rhs: float           # sum_T |I_T| prod size_j(T)
    level_rhs: float          # sum_n (sum_T |I_T|) prod min(2^-n E_j, S_j)
    majorant: float           # sum_n 2^(2n) prod min(2^-n E_j, S_j)
    final: float              # prod S_j^theta_j E_j^(1-theta_j)
    theta: tuple = ()

    def ratios(self) -> dict:
        def r(x, y):
            return x / y if y else (0.0 if x == 0 else math.inf)
        return {
            "lhs/tree_sum": r(self.lhs, self.tree_sum),
            "tree_sum/tree_rhs": r(self.tree_sum, self.tree_rhs),
            "tree_rhs/level_rhs": r(self.tree_rhs, self.level_rhs),
            "level_rhs/majorant": r(self.level_rhs, self.majorant),
            "majorant/final": r(self.majorant, self.final),
            "lhs/final": r(self.lhs, self.final),
        }

    def to_json(self) -> dict:
        d = {k: v for k, v in self.__dict__.items() if k != "theta"}
        d["theta"] = [str(t) for t in self.theta]
        d["ratios"] = self.ratios()
        return d


def abstract_bound_check(coll, a1: CoeffSeq, a2: CoeffSeq, a3: CoeffSeq, theta) -> BoundReport:
    th = check_theta(theta)
    seqs = (a1.with_slot(1), a2.with_slot(2), a3.with_slot(3))
    part = full_partition(coll, *seqs)
    lhs = abs(float(trilinear_terms(part.stripped, *seqs)))
    if not part.stripped:
        return BoundReport(lhs, 0.0, 0.0, 0.0, 0.0, 0.0, th)
    E = [math.sqrt(float(e)) for e in part.energies_sq]
    S = [math.sqrt(float(s)) for s in part.sizes_sq]
    tree_sum = tree_rhs = level_rhs = majorant = 0.0
    for L in part.levels:
        mins = [min(2.0 ** -L.n * E[j], S[j]) for j in range(3)]
        prod_min = mins[0] * mins[1] * mins[2]
        lengths = 0.0
        for ft in L.trees():
            lo, hi = tree_estimate(ft.tree, *seqs)
            tree_sum += abs(float(lo))
            tree_rhs += hi
            lengths += float(ft.tree.time_length)
        level_rhs += lengths * prod_min
        majorant += 4.0 ** L.n * prod_min
    rep = norm_report(part.stripped, seqs)
    final = abstract_rhs(part.stripped, *seqs, th, report=rep)
    return BoundReport(lhs, tree_sum, tree_rhs, level_rhs, majorant, final, th)


def forest_to_json_text(forest: Forest) -> str:
    return json.dumps(forest.to_json(), sort_keys=True)
