"""The Walsh bilinear Hilbert transform, the biest and their multilinear forms.

Exact evaluation goes through :class:`PacketTable` (all packet coefficients
of a step function) and :func:`synthesize`.  Nested sums over pairs of
quartiles are driven by tile-order pair lists: ``P_1 <= Q_3`` pairs come
either from an ancestor walk (``ancestor_pairs``) or from a descendant scan
(``descendant_pairs``); the two are independent routes to the same set.

The ``*Form`` classes at the bottom are float versions used by the harness.
"""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .dyadic import ZERO, DyadicInterval, ExactScalar, half_power
from .phaseplane import Quartile, Tile, canonical, subtile
from .walsh import (
    PacketTable,
    StepFunction,
    WindowTooSmall,
    _common,
    inner_product,
    packet_inner,
    packet_inner_array,
    pair_with_packet,
    synthesize,
    synthesize_float,
    wave_packet,
)


@dataclass
class CoeffSeq:
    """Coefficients ``a_{P_j}`` indexed by quartile."""

    entries: dict
    slot: int
    exact: bool = True

    def __post_init__(self):
        if self.slot not in (1, 2, 3):
            raise ValueError(f"slot must be 1, 2 or 3, got {self.slot}")

    def __getitem__(self, P: Quartile):
        return self.entries.get(P, ZERO if self.exact else 0.0)

    def __len__(self) -> int:
        return len(self.entries)

    def keys(self):
        return self.entries.keys()

    def restrict(self, coll: Iterable[Quartile]) -> CoeffSeq:
        return CoeffSeq({P: self[P] for P in coll}, self.slot, self.exact)

    def square(self, P: Quartile):
        v = self[P]
        return v.square() if self.exact else float(v) ** 2

    def to_float(self) -> CoeffSeq:
        return CoeffSeq({P: float(v) for P, v in self.entries.items()}, self.slot, exact=False)

    def with_slot(self, slot: int) -> CoeffSeq:
        return CoeffSeq(self.entries, slot, self.exact)

    def to_json(self) -> dict:
        return {
            "slot": self.slot,
            "entries": [[P.to_json(), v.to_json() if self.exact else float(v)]
                        for P, v in sorted(self.entries.items(), key=lambda kv: kv[0].key)],
        }

    @classmethod
    def from_json(cls, d: Mapping) -> CoeffSeq:
        entries = {}
        exact = True
        for P, v in d["entries"]:
            if isinstance(v, list):
                entries[Quartile.from_json(P)] = ExactScalar.from_json(v)
            else:
                exact = False
                entries[Quartile.from_json(P)] = float(v)
        return cls(entries, int(d["slot"]), exact)


def coefficients(coll: Iterable[Quartile], f: StepFunction, slot: int,
                 table: PacketTable | None = None) -> CoeffSeq:
    """``a_{P_slot} = <f, phi_{P_slot}>`` for every quartile of ``coll``."""
    table = table or PacketTable.of(f)
    return CoeffSeq({P: table.coeff(subtile(P, slot)) for P in coll}, slot)


# ---------------------------------------------------------------------------
# plumbing


def _needed_resolution(colls: Sequence[Iterable[Quartile]]) -> int:
    # the third sub-tile has the largest frequency index
    return max((P.k + (4 * P.l + 2).bit_length() for c in colls for P in c), default=-10**9)


def _prepare(colls: Sequence[Sequence[Quartile]], *fs: StepFunction) -> list[StepFunction]:
    """Bring functions to a common window and a resolution fine enough for
    every sub-tile, checking that each quartile sits inside the window."""
    fs = list(fs)
    for i in range(1, len(fs)):
        fs[0], fs[i] = _common(fs[0], fs[i])
    for i in range(1, len(fs)):
        fs[i], _ = _common(fs[i], fs[0])
    W = fs[0].window
    for c in colls:
        for P in c:
            if not W.contains(P.time):
                raise WindowTooSmall(f"{P} is not inside the window {W}")
    K = max(fs[0].resolution, _needed_resolution(colls))
    return [f.refine(K) for f in fs]


def _tables(fs: Sequence[StepFunction]) -> list[PacketTable]:
    return [PacketTable.of(f) for f in fs]


def ancestor_pairs(lower: Sequence[Tile], upper: Sequence[Tile]) -> list[tuple[int, int]]:
    """All index pairs ``(a, b)`` with ``lower[a] <= upper[b]``.

    Upper tiles are indexed by time interval; each lower tile walks up its
    time ancestors and picks the frequency range nested in its own.
    """
    index: dict[tuple[int, int], tuple[list[int], list[int]]] = {}
    for b, t in sorted(enumerate(upper), key=lambda it: it[1].l):
        ls, ids = index.setdefault((t.k, t.n), ([], []))
        ls.append(t.l)
        ids.append(b)
    if not index:
        return []
    kmin = min(t.k for t in upper)
    out = []
    for a, t in enumerate(lower):
        for d in range(0, t.k - kmin + 1):
            ent = index.get((t.k - d, t.n >> d))
            if ent is None:
                continue
            ls, ids = ent
            lo = bisect_left(ls, t.l << d)
            hi = bisect_left(ls, (t.l + 1) << d)
            out.extend((a, ids[x]) for x in range(lo, hi))
    return out


def descendant_pairs(lower: Sequence[Tile], upper: Sequence[Tile]) -> list[tuple[int, int]]:
    """Same set as :func:`ancestor_pairs`, found from the upper side.

    Lower tiles are indexed by (scale, frequency); each upper tile scans the
    time positions under it at every finer scale.
    """
    index: dict[tuple[int, int], tuple[list[int], list[int]]] = {}
    for a, t in sorted(enumerate(lower), key=lambda it: it[1].n):
        ns, ids = index.setdefault((t.k, t.l), ([], []))
        ns.append(t.n)
        ids.append(a)
    if not index:
        return []
    kmax = max(t.k for t in lower)
    out = []
    for b, u in enumerate(upper):
        for d in range(0, kmax - u.k + 1):
            ent = index.get((u.k + d, u.l >> d))
            if ent is None:
                continue
            ns, ids = ent
            lo = bisect_left(ns, u.n << d)
            hi = bisect_left(ns, (u.n + 1) << d)
            out.extend((ids[x], b) for x in range(lo, hi))
    return sorted(out)


# ---------------------------------------------------------------------------
# bilinear Hilbert transform


def bht(P_coll: Iterable[Quartile], f1: StepFunction, f2: StepFunction) -> StepFunction:
    """``sum_P |I_P|^{-1/2} <f1, phi_P1> <f2, phi_P2> phi_P3``."""
    P_coll = canonical(P_coll)
    f1, f2 = _prepare([P_coll], f1, f2)
    t1, t2 = _tables([f1, f2])
    out = {}
    for P in P_coll:
        c = half_power(P.k) * t1.coeff(subtile(P, 1)) * t2.coeff(subtile(P, 2))
        out[subtile(P, 3)] = c
    return synthesize(out, f1.window, f1.resolution)


def bht_adjoint(P_coll: Iterable[Quartile], f3: StepFunction, f4: StepFunction) -> StepFunction:
    """``sum_P |I_P|^{-1/2} <f3, phi_P2> <f4, phi_P3> phi_P1``."""
    P_coll = canonical(P_coll)
    f3, f4 = _prepare([P_coll], f3, f4)
    t3, t4 = _tables([f3, f4])
    out = {}
    for P in P_coll:
        out[subtile(P, 1)] = half_power(P.k) * t3.coeff(subtile(P, 2)) * t4.coeff(subtile(P, 3))
    return synthesize(out, f3.window, f3.resolution)


def bht_restricted(P: Tile, Q_coll: Iterable[Quartile], f1: StepFunction, f2: StepFunction
                   ) -> StepFunction:
    """The bilinear sum over the quartiles ``Q`` with ``omega_{Q3}`` inside ``omega_P``."""
    kept = [Q for Q in Q_coll if P.freq.contains(subtile(Q, 3).freq)]
    if not kept:
        f1, f2 = _prepare([list(Q_coll)], f1, f2)
        return StepFunction.zero(f1.window, f1.resolution)
    return bht(kept, f1, f2)


def bht_trilinear(P_coll: Iterable[Quartile], f1, f2, f3) -> ExactScalar:
    """``<B(f1, f2), f3>`` summed coefficient-wise."""
    P_coll = canonical(P_coll)
    fs = _prepare([P_coll], f1, f2, f3)
    t = _tables(fs)
    total = ZERO
    for P in P_coll:
        total = total + half_power(P.k) * t[0].coeff(subtile(P, 1)) * t[1].coeff(subtile(P, 2)) \
            * t[2].coeff(subtile(P, 3))
    return total


# ---------------------------------------------------------------------------
# biest


def _inner_b(P_coll: list[Quartile], Q_coll: list[Quartile], p_slot: int,
             ta: PacketTable, tb: PacketTable) -> list[ExactScalar]:
    """``<B_{P_slot, Q}(g_a, g_b), phi_{P_slot}>`` for each P."""
    lower = [subtile(P, p_slot) for P in P_coll]
    upper = [subtile(Q, 3) for Q in Q_coll]
    cq = [half_power(Q.k) * ta.coeff(subtile(Q, 1)) * tb.coeff(subtile(Q, 2)) for Q in Q_coll]
    out = [ZERO] * len(P_coll)
    for a, b in ancestor_pairs(lower, upper):
        if cq[b]:
            out[a] = out[a] + cq[b] * packet_inner(lower[a], upper[b])
    return out


@dataclass
class BiestResult:
    t_prime: StepFunction
    t_double: StepFunction

    @property
    def total(self) -> StepFunction:
        return self.t_prime + self.t_double


def biest(P_coll, Q_coll, f1: StepFunction, f2: StepFunction, f3: StepFunction) -> BiestResult:
    """``T' + T''`` with both parts exposed."""
    P_coll, Q_coll = canonical(P_coll), canonical(Q_coll)
    f1, f2, f3 = _prepare([P_coll, Q_coll], f1, f2, f3)
    t1, t2, t3 = _tables([f1, f2, f3])
    b1 = _inner_b(P_coll, Q_coll, 1, t1, t2)
    b2 = _inner_b(P_coll, Q_coll, 2, t2, t3)
    tp, td = {}, {}
    for P, x1, x2 in zip(P_coll, b1, b2):
        h = half_power(P.k)
        tp[subtile(P, 3)] = h * x1 * t3.coeff(subtile(P, 2))
        td[subtile(P, 3)] = h * t1.coeff(subtile(P, 1)) * x2
    W, K = f1.window, f1.resolution
    return BiestResult(synthesize(tp, W, K), synthesize(td, W, K))


@dataclass
class QuadResult:
    lam_prime: ExactScalar
    lam_double: ExactScalar

    @property
    def total(self) -> ExactScalar:
        return self.lam_prime + self.lam_double


def quad_form(P_coll, Q_coll, f1, f2, f3, f4) -> QuadResult:
    """``Lambda = int T(f1, f2, f3) f4`` split as ``Lambda' + Lambda''``."""
    P_coll, Q_coll = canonical(P_coll), canonical(Q_coll)
    fs = _prepare([P_coll, Q_coll], f1, f2, f3, f4)
    t1, t2, t3, t4 = _tables(fs)
    b1 = _inner_b(P_coll, Q_coll, 1, t1, t2)
    b2 = _inner_b(P_coll, Q_coll, 2, t2, t3)
    lp = ld = ZERO
    for P, x1, x2 in zip(P_coll, b1, b2):
        c4 = t4.coeff(subtile(P, 3))
        if not c4:
            continue
        h = half_power(P.k) * c4
        lp = lp + h * x1 * t3.coeff(subtile(P, 2))
        ld = ld + h * t1.coeff(subtile(P, 1)) * x2
    return QuadResult(lp, ld)


def a3_sequence(P_coll, Q_coll, f3: StepFunction, f4: StepFunction) -> CoeffSeq:
    """``a3_{Q3} = sum_{P: omega_Q3 in omega_P1} |I_P|^{-1/2} <f3,phi_P2><f4,phi_P3><phi_P1,phi_Q3>``."""
    P_coll, Q_coll = canonical(P_coll), canonical(Q_coll)
    f3, f4 = _prepare([P_coll, Q_coll], f3, f4)
    t3, t4 = _tables([f3, f4])
    lower = [subtile(P, 1) for P in P_coll]
    upper = [subtile(Q, 3) for Q in Q_coll]
    cp = [half_power(P.k) * t3.coeff(subtile(P, 2)) * t4.coeff(subtile(P, 3)) for P in P_coll]
    out = {Q: ZERO for Q in Q_coll}
    for a, b in descendant_pairs(lower, upper):
        if cp[a]:
            Q = Q_coll[b]
            out[Q] = out[Q] + cp[a] * packet_inner(lower[a], upper[b])
    return CoeffSeq(out, 3)


def rightform_sum(Q_coll, a1: CoeffSeq, a2: CoeffSeq, a3: CoeffSeq):
    """``sum_Q |I_Q|^{-1/2} a1 a2 a3`` (exact or float)."""
    exact = a1.exact and a2.exact and a3.exact
    total = ZERO if exact else 0.0
    for Q in canonical(Q_coll):
        if exact:
            total = total + half_power(Q.k) * a1[Q] * a2[Q] * a3[Q]
        else:
            total += 2.0 ** (Q.k / 2) * float(a1[Q]) * float(a2[Q]) * float(a3[Q])
    return total


# ---------------------------------------------------------------------------
# reference route: explicit packets, direct cell sums


def _packet_sum(terms, window: DyadicInterval, K: int) -> StepFunction:
    acc = StepFunction.zero(window, K)
    for c, T in terms:
        if c:
            acc = acc + wave_packet(T, window, K) * c
    return acc


def bht_reference(P_coll, f1: StepFunction, f2: StepFunction) -> StepFunction:
    P_coll = canonical(P_coll)
    f1, f2 = _prepare([P_coll], f1, f2)
    terms = [(half_power(P.k) * pair_with_packet(f1, subtile(P, 1)) * pair_with_packet(f2, subtile(P, 2)),
              subtile(P, 3)) for P in P_coll]
    return _packet_sum(terms, f1.window, f1.resolution)


def biest_reference(P_coll, Q_coll, f1, f2, f3) -> BiestResult:
    """Literal nested evaluation; each inner operator is built as a function."""
    P_coll, Q_coll = canonical(P_coll), canonical(Q_coll)
    f1, f2, f3 = _prepare([P_coll, Q_coll], f1, f2, f3)
    W, K = f1.window, f1.resolution
    tp, td = [], []
    for P in P_coll:
        p1, p2, p3 = (subtile(P, j) for j in (1, 2, 3))
        inner1 = bht_restricted(p1, Q_coll, f1, f2)
        inner2 = bht_restricted(p2, Q_coll, f2, f3)
        h = half_power(P.k)
        tp.append((h * pair_with_packet(inner1, p1) * pair_with_packet(f3, p2), p3))
        td.append((h * pair_with_packet(f1, p1) * pair_with_packet(inner2, p2), p3))
    return BiestResult(_packet_sum(tp, W, K), _packet_sum(td, W, K))


def quad_form_reference(P_coll, Q_coll, f1, f2, f3, f4) -> QuadResult:
    r = biest_reference(P_coll, Q_coll, f1, f2, f3)
    return QuadResult(inner_product(r.t_prime, f4), inner_product(r.t_double, f4))


# ---------------------------------------------------------------------------
# float multilinear forms for optimisation


def tile_arrays(tiles: Sequence[Tile]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    ks = np.array([t.k for t in tiles], dtype=np.int64)
    ns = np.array([t.n for t in tiles], dtype=np.int64)
    ls = np.array([t.l for t in tiles], dtype=np.int64)
    return ks, ns, ls


@dataclass
class _Slot:
    tiles: tuple  # (ks, ns, ls)

    def coeffs(self, table: PacketTable) -> np.ndarray:
        return table.coeffs_float(*self.tiles)


class PacketForm:
    """Common interface: ``value(fs)`` and ``gradient(fs, i)``.

    ``fs`` are float cell arrays on ``window`` at ``resolution``; the form is
    linear in each argument and ``value(fs) = sum(fs[i] * gradient(fs, i)) * cell``.
    """

    window: DyadicInterval
    resolution: int
    nslots: int
    slots: list[_Slot]

    @property
    def cell(self) -> float:
        return 2.0 ** -self.resolution

    def _coeffs(self, fs) -> list[np.ndarray]:
        return [s.coeffs(PacketTable.of_float(self.window, self.resolution, f))
                for s, f in zip(self.slots, fs)]

    def _synth(self, i: int, c: np.ndarray) -> np.ndarray:
        # the function G with <f, G> = sum_t c_t <f, phi_t>
        return synthesize_float(self.window, self.resolution, *self.slots[i].tiles, c)


class BhtForm(PacketForm):
    """``Lambda(f1, f2, f3) = sum_P |I_P|^{-1/2} <f1,phi_P1><f2,phi_P2><f3,phi_P3>``."""

    nslots = 3

    def __init__(self, P_coll: Sequence[Quartile], window: DyadicInterval, resolution: int):
        self.P = canonical(P_coll)
        self.window, self.resolution = window, resolution
        self.slots = [_Slot(tile_arrays([subtile(P, j) for P in self.P])) for j in (1, 2, 3)]
        self.weight = np.array([2.0 ** (P.k / 2) for P in self.P])

    def value(self, fs) -> float:
        c = self._coeffs(fs)
        return float(np.sum(self.weight * c[0] * c[1] * c[2]))

    def gradient(self, fs, i: int) -> np.ndarray:
        c = self._coeffs(fs)
        others = [c[j] for j in range(3) if j != i]
        return self._synth(i, self.weight * others[0] * others[1])


def _pair_weights(P, Q, lower, upper, pi, qi) -> np.ndarray:
    """``|I_P|^{-1/2} |I_Q|^{-1/2} <phi_lower, phi_upper>`` for each index pair."""
    if len(pi) == 0:
        return np.zeros(0)
    lo = tuple(x[pi] for x in tile_arrays(lower))
    up = tuple(x[qi] for x in tile_arrays(upper))
    return 2.0 ** ((lo[0] + up[0]) / 2) * packet_inner_array(lo, up)


class LambdaPrimeForm(PacketForm):
    """``Lambda'`` in the reversed order: pairs ``(P, Q)`` with ``P_1 <= Q_3``.

    ``Lambda' = sum_{(P,Q)} w_PQ <f1,phi_Q1><f2,phi_Q2><f3,phi_P2><f4,phi_P3>``
    with ``w_PQ = |I_P|^{-1/2} |I_Q|^{-1/2} <phi_P1, phi_Q3>``.
    """

    nslots = 4

    def __init__(self, P_coll, Q_coll, window: DyadicInterval, resolution: int):
        self.P, self.Q = canonical(P_coll), canonical(Q_coll)
        self.window, self.resolution = window, resolution
        p1 = [subtile(P, 1) for P in self.P]
        q3 = [subtile(Q, 3) for Q in self.Q]
        pairs = ancestor_pairs(p1, q3)
        self.pi = np.array([a for a, _ in pairs], dtype=np.int64)
        self.qi = np.array([b for _, b in pairs], dtype=np.int64)
        self.w = _pair_weights(self.P, self.Q, p1, q3, self.pi, self.qi)
        self.slots = [
            _Slot(tile_arrays([subtile(Q, 1) for Q in self.Q])),
            _Slot(tile_arrays([subtile(Q, 2) for Q in self.Q])),
            _Slot(tile_arrays([subtile(P, 2) for P in self.P])),
            _Slot(tile_arrays([subtile(P, 3) for P in self.P])),
        ]

    @property
    def npairs(self) -> int:
        return len(self.w)

    def value(self, fs) -> float:
        c = self._coeffs(fs)
        return float(np.sum(self.w * c[0][self.qi] * c[1][self.qi] * c[2][self.pi] * c[3][self.pi]))

    def gradient(self, fs, i: int) -> np.ndarray:
        c = self._coeffs(fs)
        if i < 2:
            # sum over P of the pair weights, per Q
            v = np.bincount(self.qi, self.w * c[2][self.pi] * c[3][self.pi], minlength=len(self.Q))
            g = v * c[1 - i]
        else:
            u = np.bincount(self.pi, self.w * c[0][self.qi] * c[1][self.qi], minlength=len(self.P))
            g = u * c[5 - i]
        return self._synth(i, g)


class LambdaDoublePrimeForm(PacketForm):
    """``Lambda''``: pairs ``(P, Q)`` with ``P_2 <= Q_3``.

    ``Lambda'' = sum w_PQ <f1,phi_P1><f2,phi_Q1><f3,phi_Q2><f4,phi_P3>``.
    """

    nslots = 4

    def __init__(self, P_coll, Q_coll, window: DyadicInterval, resolution: int):
        self.P, self.Q = canonical(P_coll), canonical(Q_coll)
        self.window, self.resolution = window, resolution
        p2 = [subtile(P, 2) for P in self.P]
        q3 = [subtile(Q, 3) for Q in self.Q]
        pairs = ancestor_pairs(p2, q3)
        self.pi = np.array([a for a, _ in pairs], dtype=np.int64)
        self.qi = np.array([b for _, b in pairs], dtype=np.int64)
        self.w = _pair_weights(self.P, self.Q, p2, q3, self.pi, self.qi)
        self.slots = [
            _Slot(tile_arrays([subtile(P, 1) for P in self.P])),
            _Slot(tile_arrays([subtile(Q, 1) for Q in self.Q])),
            _Slot(tile_arrays([subtile(Q, 2) for Q in self.Q])),
            _Slot(tile_arrays([subtile(P, 3) for P in self.P])),
        ]

    def value(self, fs) -> float:
        c = self._coeffs(fs)
        return float(np.sum(self.w * c[0][self.pi] * c[1][self.qi] * c[2][self.qi] * c[3][self.pi]))

    def gradient(self, fs, i: int) -> np.ndarray:
        c = self._coeffs(fs)
        if i in (1, 2):
            v = np.bincount(self.qi, self.w * c[0][self.pi] * c[3][self.pi], minlength=len(self.Q))
            g = v * c[3 - i]
        else:
            u = np.bincount(self.pi, self.w * c[1][self.qi] * c[2][self.qi], minlength=len(self.P))
            g = u * c[3 - i]
        return self._synth(i, g)


@dataclass
class SumForm(PacketForm):
    """Sum of forms sharing window and resolution (e.g. ``Lambda' + Lambda''``)."""

    parts: list = field(default_factory=list)

    def __post_init__(self):
        self.window = self.parts[0].window
        self.resolution = self.parts[0].resolution
        self.nslots = self.parts[0].nslots

    def value(self, fs) -> float:
        return sum(p.value(fs) for p in self.parts)

    def gradient(self, fs, i: int) -> np.ndarray:
        return sum(p.gradient(fs, i) for p in self.parts)
