"""Tiles, quartiles and trees in the Walsh phase plane.

A tile ``(k, n, l)`` is ``[2^-k n, 2^-k (n+1)) x [2^k l, 2^k (l+1))``; a quartile
``(k, n, l)`` has the same time interval and frequency ``[2^(k+2) l, 2^(k+2) (l+1))``.
Everything here works on the integer triples; the :class:`DyadicInterval` views
are there for readability and for the brute-force checks in the tests.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator

import numpy as np

from .dyadic import DyadicInterval, Relation, interval_relate


class DisjointnessViolation(ValueError):
    pass


@dataclass(frozen=True, slots=True)
class Tile:
    k: int
    n: int
    l: int

    def __post_init__(self):
        if self.l < 0:
            raise ValueError(f"tile frequency index must be >= 0, got {self.l}")

    @classmethod
    def from_intervals(cls, time: DyadicInterval, freq: DyadicInterval) -> Tile:
        if time.scale + freq.scale != 0:
            raise ValueError("a tile must have area one")
        return cls(-time.scale, time.index, freq.index)

    @property
    def time(self) -> DyadicInterval:
        return DyadicInterval(-self.k, self.n)

    @property
    def freq(self) -> DyadicInterval:
        return DyadicInterval(self.k, self.l)

    @property
    def key(self) -> tuple[int, int, int]:
        return (-self.k, self.n, self.l)

    def to_json(self) -> list[int]:
        return [self.k, self.n, self.l]

    def __str__(self) -> str:
        return f"{self.time}x{self.freq}"


@dataclass(frozen=True, slots=True)
class Quartile:
    k: int
    n: int
    l: int

    def __post_init__(self):
        if self.l < 0:
            raise ValueError(f"quartile frequency index must be >= 0, got {self.l}")

    @classmethod
    def from_intervals(cls, time: DyadicInterval, freq: DyadicInterval) -> Quartile:
        if time.scale + freq.scale != 2:
            raise ValueError("a quartile must have area four")
        return cls(-time.scale, time.index, freq.index)

    @property
    def time(self) -> DyadicInterval:
        return DyadicInterval(-self.k, self.n)

    @property
    def freq(self) -> DyadicInterval:
        return DyadicInterval(self.k + 2, self.l)

    @property
    def key(self) -> tuple[int, int, int]:
        return (-self.k, self.n, self.l)

    def sub(self, j: int) -> Tile:
        return subtile(self, j)

    @property
    def center(self) -> Fraction:
        """Midpoint of the frequency interval."""
        return (Fraction(2) ** (self.k + 2)) * (2 * self.l + 1) / 2

    def to_json(self) -> list[int]:
        return [self.k, self.n, self.l]

    @classmethod
    def from_json(cls, triple) -> Quartile:
        k, n, l = triple
        return cls(int(k), int(n), int(l))

    def __str__(self) -> str:
        return f"Q{self.time}x{self.freq}"


def subtile(P: Quartile, j: int) -> Tile:
    if j not in (1, 2, 3):
        raise ValueError(f"sub-tile index must be 1, 2 or 3, got {j}")
    return Tile(P.k, P.n, 4 * P.l + j - 1)


def canonical(coll: Iterable) -> list:
    return sorted(coll, key=lambda p: p.key)


# ---------------------------------------------------------------------------
# order


def tile_lt(a: Tile, b: Tile) -> bool:
    """``a < b``: time(a) strictly inside time(b) and freq(b) inside freq(a)."""
    d = a.k - b.k
    return d > 0 and (a.n >> d) == b.n and (b.l >> d) == a.l


def tile_le(a: Tile, b: Tile) -> bool:
    return a == b or tile_lt(a, b)


def tiles_intersect(a: Tile, b: Tile) -> bool:
    return (interval_relate(a.time, b.time) is not Relation.DISJOINT
            and interval_relate(a.freq, b.freq) is not Relation.DISJOINT)


def packet_overlap(a: Tile, b: Tile) -> bool:
    """Fast rectangle intersection test on the integer triples."""
    if a.k < b.k:
        a, b = b, a
    d = a.k - b.k
    return (a.n >> d) == b.n and (b.l >> d) == a.l


# ---------------------------------------------------------------------------
# trees


@dataclass(frozen=True)
class Tree:
    members: frozenset
    top: Quartile
    kind: int

    def is_valid(self) -> bool:
        top = subtile(self.top, self.kind)
        return all(tile_le(subtile(P, self.kind), top) for P in self.members)

    @property
    def time_length(self) -> Fraction:
        return self.top.time.length

    def __len__(self) -> int:
        return len(self.members)

    def to_json(self) -> dict:
        return {
            "top": self.top.to_json(),
            "kind": self.kind,
            "members": [P.to_json() for P in canonical(self.members)],
            "time_length": str(self.time_length),
        }


def maximal_tree(top: Quartile, kind: int, coll: Iterable[Quartile]) -> Tree:
    t = subtile(top, kind)
    members = frozenset(P for P in coll if tile_le(subtile(P, kind), t))
    return Tree(members, top, kind)


# ---------------------------------------------------------------------------
# geometric lemmas as predicates


def check_lacunarity(Pa: Quartile, Pb: Quartile, i: int, j: int) -> bool:
    """Whether ``Pa_i <= Pb_i  =>  Pa_j  and  Pb_j  are disjoint`` holds.

    The implication concerns two different quartiles; for ``Pa == Pb`` it is
    reported as holding.
    """
    if i == j:
        raise ValueError("lacunarity compares two different sub-tile indices")
    if Pa == Pb:
        return True
    if not tile_le(subtile(Pa, i), subtile(Pb, i)):
        return True
    return not tiles_intersect(subtile(Pa, j), subtile(Pb, j))


def biest_restrict(P_coll: Iterable[Quartile], D: Iterable[Quartile]) -> set[Quartile]:
    """Quartiles ``P`` with ``P_1 <= Q_3`` for some ``Q`` in ``D``.

    ``D`` must have pairwise disjoint third sub-tiles.
    """
    D = list(D)
    tops = [subtile(Q, 3) for Q in D]
    for x in range(len(tops)):
        for y in range(x + 1, len(tops)):
            if packet_overlap(tops[x], tops[y]):
                raise DisjointnessViolation(f"{D[x]} and {D[y]} have overlapping third sub-tiles")
    # P_1 <= Q_3: walk the time ancestors of P_1 and look for Q_3 tiles there
    by_time: dict[tuple[int, int], list[Tile]] = {}
    for t in tops:
        by_time.setdefault((t.k, t.n), []).append(t)
    kmin = min((t.k for t in tops), default=0)
    out = set()
    for P in P_coll:
        p1 = subtile(P, 1)
        d = 0
        while p1.k - d >= kmin and P not in out:
            for t in by_time.get((p1.k - d, p1.n >> d), ()):
                if (t.l >> d) == p1.l:
                    out.add(P)
                    break
            d += 1
    return out


def biest_trick_counterexamples(P_coll, D) -> list[tuple[Quartile, Quartile]]:
    """Pairs violating the equivalence behind :func:`biest_restrict`."""
    restricted = biest_restrict(P_coll, D)
    bad = []
    for P in P_coll:
        p1 = subtile(P, 1)
        for Q in D:
            q3 = subtile(Q, 3)
            if not tiles_intersect(p1, q3):
                continue
            if p1.freq.contains(q3.freq) != (P in restricted):
                bad.append((P, Q))
    return bad


# ---------------------------------------------------------------------------
# enumeration and random generation


def quartiles_in(window: DyadicInterval, k_range: tuple[int, int], freq_bound: Fraction | int
                 ) -> Iterator[Quartile]:
    """All quartiles with time inside ``window``, ``kmin <= k <= kmax`` and
    frequency inside ``[0, freq_bound)``."""
    kmin, kmax = k_range
    for k in range(kmin, kmax + 1):
        if -k > window.scale:
            continue
        d = window.scale + k
        flen = Fraction(2) ** (k + 2)
        nl = int(Fraction(freq_bound) / flen)
        for n in range(window.index << d, (window.index + 1) << d):
            for l in range(nl):
                yield Quartile(k, n, l)


def tiles_in(window: DyadicInterval, k_range: tuple[int, int], freq_bound) -> Iterator[Tile]:
    kmin, kmax = k_range
    for k in range(kmin, kmax + 1):
        if -k > window.scale:
            continue
        d = window.scale + k
        nl = int(Fraction(freq_bound) / Fraction(2) ** k)
        for n in range(window.index << d, (window.index + 1) << d):
            for l in range(nl):
                yield Tile(k, n, l)


def random_quartiles(rng: np.random.Generator, window: DyadicInterval, resolution: int,
                     count: int, k_range: tuple[int, int] | None = None) -> list[Quartile]:
    """Distinct random quartiles representable at ``resolution`` inside ``window``.

    Scales are drawn uniformly from ``k_range`` (clipped so the third sub-tile
    still fits the resolution), positions and frequencies uniformly.
    """
    kmin_ok = -window.scale
    kmax_ok = resolution - 2
    if k_range is None:
        k_range = (kmin_ok, kmax_ok)
    kmin, kmax = max(k_range[0], kmin_ok), min(k_range[1], kmax_ok)
    if kmin > kmax:
        raise ValueError("no quartile scale fits the window and resolution")
    total = sum(2 ** (window.scale + k) * 2 ** (resolution - k - 2) for k in range(kmin, kmax + 1))
    count = min(count, total)
    seen: set[Quartile] = set()
    while len(seen) < count:
        k = int(rng.integers(kmin, kmax + 1))
        d = window.scale + k
        n = (window.index << d) + int(rng.integers(0, 1 << d))
        l = int(rng.integers(0, 1 << (resolution - k - 2)))
        seen.add(Quartile(k, n, l))
    return canonical(seen)


def random_disjoint_family(rng: np.random.Generator, candidates: list[Quartile], slot: int,
                           attempts: int) -> list[Quartile]:
    """Greedy random subfamily whose ``slot`` sub-tiles are pairwise disjoint."""
    chosen: list[Quartile] = []
    tiles: list[Tile] = []
    if not candidates:
        return chosen
    order = rng.permutation(len(candidates))[:attempts]
    for idx in order:
        Q = candidates[int(idx)]
        t = subtile(Q, slot)
        if any(packet_overlap(t, s) for s in tiles):
            continue
        chosen.append(Q)
        tiles.append(t)
    return canonical(chosen)


def random_tiling(rng: np.random.Generator, time: DyadicInterval, freq: DyadicInterval
                  ) -> list[Tile]:
    """Random partition of a dyadic rectangle of area ``>= 1`` into tiles."""
    if time.scale + freq.scale < 0:
        raise ValueError("rectangle has area below one")
    out: list[Tile] = []
    stack = [(time, freq)]
    while stack:
        t, f = stack.pop()
        if t.scale + f.scale == 0:
            out.append(Tile.from_intervals(t, f))
        elif rng.random() < 0.5:
            a, b = t.children()
            stack += [(a, f), (b, f)]
        else:
            a, b = f.children()
            stack += [(t, a), (t, b)]
    return canonical(out)


def collection_to_json(coll: Iterable[Quartile]) -> list[list[int]]:
    return [P.to_json() for P in canonical(coll)]


def collection_from_json(data) -> list[Quartile]:
    return canonical(Quartile.from_json(t) for t in data)
