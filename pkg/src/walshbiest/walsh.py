"""Walsh functions, wave packets and step functions on a dyadic window.

A :class:`StepFunction` lives on a dyadic window ``W`` and is constant on the
cells of length ``2**-K``. Values are exact (:class:`ExactArray`); a floating
view is available for optimisation loops.

Two routes compute pairings with wave packets: the reference route builds each
packet explicitly and sums cell products, the fast route runs the packet
butterfly (a Walsh-Hadamard transform organised by time scale).
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

import numpy as np

from .dyadic import (
    ZERO,
    DyadicInterval,
    ExactArray,
    ExactScalar,
    half_power,
)
from .phaseplane import Tile


class ResolutionTooCoarse(ValueError):
    pass


class WindowTooSmall(ValueError):
    pass


class NegativeInput(ValueError):
    pass


def bitrev(m: int, bits: int) -> int:
    r = 0
    for _ in range(bits):
        r = (r << 1) | (m & 1)
        m >>= 1
    return r


def walsh_signs(l: int, K: int) -> np.ndarray:
    """Values of ``w_l`` on the ``2**K`` cells of ``[0, 1)`` (closed form)."""
    if l >= (1 << K):
        raise ResolutionTooCoarse(f"w_{l} is not constant on cells of length 2^-{K}")
    cells = np.arange(1 << K, dtype=np.int64)
    rev = np.zeros_like(cells)
    tmp = cells.copy()
    for _ in range(K):
        rev = (rev << 1) | (tmp & 1)
        tmp >>= 1
    bits = rev & l
    parity = np.zeros_like(bits)
    while np.any(bits):
        parity ^= bits & 1
        bits >>= 1
    return 1 - 2 * parity


def walsh_by_recursion(l: int, K: int) -> np.ndarray:
    """``w_l`` on ``2**K`` cells by unrolling the doubling recursion."""
    if l >= (1 << K):
        raise ResolutionTooCoarse(f"w_{l} is not constant on cells of length 2^-{K}")
    if l == 0:
        return np.ones(1 << K, dtype=np.int64)
    half = walsh_by_recursion(l >> 1, K - 1)
    # w_{2l}(x) = w_l(2x) + w_l(2x-1); the two terms live on the two halves
    return np.concatenate([half, half if l % 2 == 0 else -half])


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StepFunction:
    window: DyadicInterval
    resolution: int
    data: ExactArray

    def __post_init__(self):
        n = self.window.scale + self.resolution
        if n < 0:
            raise ResolutionTooCoarse("resolution coarser than the window")
        if self.data.shape != (1 << n,):
            raise ValueError(f"expected {1 << n} cell values, got {self.data.shape}")

    @property
    def ncells(self) -> int:
        return 1 << (self.window.scale + self.resolution)

    @property
    def cell_length(self) -> Fraction:
        return Fraction(1, 1 << self.resolution) if self.resolution >= 0 else Fraction(1 << -self.resolution)

    @property
    def values(self) -> list[ExactScalar]:
        return self.data.scalars()

    @classmethod
    def from_values(cls, window: DyadicInterval, resolution: int, values) -> StepFunction:
        values = list(values)
        if values and all(isinstance(v, (int, np.integer)) for v in values):
            return cls(window, resolution, ExactArray.from_ints(np.array(values, dtype=object)))
        return cls(window, resolution, ExactArray.from_scalars(values))

    @classmethod
    def zero(cls, window: DyadicInterval, resolution: int) -> StepFunction:
        return cls(window, resolution, ExactArray.zeros((1 << (window.scale + resolution),)))

    @classmethod
    def indicator(cls, window: DyadicInterval, resolution: int, interval: DyadicInterval
                  ) -> StepFunction:
        n = 1 << (window.scale + resolution)
        vals = np.zeros(n, dtype=np.int64)
        lo, hi = _cell_range(window, resolution, interval)
        vals[lo:hi] = 1
        return cls(window, resolution, ExactArray.from_ints(vals))

    def to_float(self) -> np.ndarray:
        return self.data.to_float()

    def cell_interval(self, c: int) -> DyadicInterval:
        return DyadicInterval(-self.resolution, (self.window.index << (self.window.scale + self.resolution)) + c)

    def refine(self, K: int) -> StepFunction:
        if K < self.resolution:
            raise ValueError("refine only goes to finer resolutions")
        rep = 1 << (K - self.resolution)
        return StepFunction(self.window, K, ExactArray(np.repeat(self.data.a, rep),
                                                        np.repeat(self.data.b, rep), self.data.m))

    def extend(self, window: DyadicInterval) -> StepFunction:
        """Same function viewed on a larger window (zero outside the old one)."""
        if not window.contains(self.window):
            raise WindowTooSmall("new window must contain the old one")
        n = 1 << (window.scale + self.resolution)
        lo, hi = _cell_range(window, self.resolution, self.window)
        a = np.zeros(n, dtype=object)
        b = np.zeros(n, dtype=object)
        a[lo:hi] = self.data.a
        b[lo:hi] = self.data.b
        return StepFunction(window, self.resolution, ExactArray(a, b, self.data.m))

    def __add__(self, other: StepFunction) -> StepFunction:
        f, g = _common(self, other)
        return StepFunction(f.window, f.resolution, f.data + g.data)

    def __sub__(self, other: StepFunction) -> StepFunction:
        f, g = _common(self, other)
        return StepFunction(f.window, f.resolution, f.data - g.data)

    def __neg__(self) -> StepFunction:
        return StepFunction(self.window, self.resolution, -self.data)

    def __mul__(self, other) -> StepFunction:
        if isinstance(other, StepFunction):
            f, g = _common(self, other)
            return StepFunction(f.window, f.resolution, f.data * g.data)
        return StepFunction(self.window, self.resolution, self.data * other)

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        if not isinstance(other, StepFunction):
            return NotImplemented
        f, g = _common(self, other)
        return f.data == g.data

    __hash__ = None

    def support_cells(self) -> np.ndarray:
        return np.nonzero((self.data.a != 0) | (self.data.b != 0))[0]

    # serialisation ------------------------------------------------------
    def to_json(self) -> dict:
        return {
            "window": self.window.to_json(),
            "resolution": self.resolution,
            "values": [v.to_json() for v in self.values],
        }

    @classmethod
    def from_json(cls, d: Mapping) -> StepFunction:
        return cls(DyadicInterval.from_json(d["window"]), int(d["resolution"]),
                   ExactArray.from_scalars(ExactScalar.from_json(t) for t in d["values"]))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x_left", "x_right", "value"])
        for c, v in enumerate(self.to_float()):
            iv = self.cell_interval(c)
            w.writerow([float(iv.start), float(iv.end), repr(float(v))])
        return buf.getvalue()


def _cell_range(window: DyadicInterval, K: int, interval: DyadicInterval) -> tuple[int, int]:
    if interval.scale < -K:
        raise ResolutionTooCoarse(f"{interval} is finer than the cells")
    if not window.contains(interval):
        raise WindowTooSmall(f"{interval} is not inside the window {window}")
    lo = (interval.index << (interval.scale + K)) - (window.index << (window.scale + K))
    return lo, lo + (1 << (interval.scale + K))


def _common(f: StepFunction, g: StepFunction) -> tuple[StepFunction, StepFunction]:
    K = max(f.resolution, g.resolution)
    f, g = f.refine(K), g.refine(K)
    if f.window != g.window:
        if f.window.contains(g.window):
            g = g.extend(f.window)
        elif g.window.contains(f.window):
            f = f.extend(g.window)
        else:
            W = f.window
            while not W.contains(g.window):
                W = W.parent()
            f, g = f.extend(W), g.extend(W)
    return f, g


# ---------------------------------------------------------------------------
# Walsh functions and wave packets (reference route)


def walsh_function(l: int, K: int) -> StepFunction:
    if l < 0:
        raise ValueError("Walsh functions are indexed by l >= 0")
    return StepFunction(DyadicInterval(0, 0), K, ExactArray.from_ints(walsh_signs(l, K)))


def _packet_cells(P: Tile, window: DyadicInterval, K: int) -> tuple[int, np.ndarray]:
    """Start cell and sign pattern of the packet ``P`` inside ``window``."""
    if P.k > K or P.l >= (1 << (K - P.k)):
        raise ResolutionTooCoarse(f"{P} is not constant on cells of length 2^-{K}")
    lo, _ = _cell_range(window, K, P.time)
    return lo, walsh_signs(P.l, K - P.k)


def wave_packet(P: Tile, window: DyadicInterval, K: int) -> StepFunction:
    lo, signs = _packet_cells(P, window, K)
    n = 1 << (window.scale + K)
    vals = np.zeros(n, dtype=np.int64)
    vals[lo:lo + len(signs)] = signs
    return StepFunction(window, K, ExactArray.from_ints(vals) * half_power(P.k))


def inner_product(f: StepFunction, g: StepFunction) -> ExactScalar:
    f, g = _common(f, g)
    return f.data.dot(g.data).scale2(-f.resolution)


def pair_with_packet(f: StepFunction, P: Tile) -> ExactScalar:
    """``<f, phi_P>`` by direct cell summation."""
    K = max(f.resolution, P.k + P.l.bit_length())
    if K > f.resolution:
        f = f.refine(K)
    if not f.window.contains(P.time):
        if not P.time.contains(f.window):
            return ZERO
        f = f.extend(P.time)
    lo, signs = _packet_cells(P, f.window, f.resolution)
    s = f.data[lo:lo + len(signs)].dot(ExactArray.from_ints(signs))
    return (s * half_power(P.k)).scale2(-f.resolution)


def packet_inner(P: Tile, R: Tile) -> ExactScalar:
    """``<phi_P, phi_R>`` in closed form.

    Nonzero only when the tiles intersect; then, with ``d`` the scale gap, the
    coarser packet restricted to the finer one's time interval is ``+-2^(d/2)``
    times a packet whose frequency interval contains the finer one's.
    """
    if P.k > R.k:
        P, R = R, P
    d = R.k - P.k
    if (R.n >> d) != P.n or (P.l >> d) != R.l:
        return ZERO
    rel = R.n - (P.n << d)
    low = P.l & ((1 << d) - 1)
    sign = -1 if bin(low & bitrev(rel, d)).count("1") % 2 else 1
    return ExactScalar(sign, 0, 0) * half_power(-d)


def packet_inner_array(lower: tuple, upper: tuple) -> np.ndarray:
    """Float ``<phi_a, phi_b>`` for aligned arrays of pairs with ``a <= b``.

    ``lower`` and ``upper`` are ``(ks, ns, ls)`` integer arrays; every lower
    tile must sit below its upper partner in the tile order.
    """
    kl, nl, _ = lower
    ku, nu, lu = upper
    d = kl - ku
    if np.any(d < 0):
        raise ValueError("lower tiles must be at least as fine in time as their partners")
    rel = nl - (nu << d)
    low = lu & ((np.int64(1) << d) - 1)
    rev = np.zeros_like(rel)
    for bit in range(int(d.max(initial=0))):
        on = bit < d
        rev |= np.where(on, ((rel >> bit) & 1) << np.maximum(d - 1 - bit, 0), 0)
    x = low & rev
    parity = np.zeros_like(x)
    while np.any(x):
        parity ^= x & 1
        x >>= 1
    return np.where(parity == 1, -1.0, 1.0) * 2.0 ** (-d / 2)


# ---------------------------------------------------------------------------
# functionals


def lp_norm(f: StepFunction, p) -> ExactScalar | float:
    """``||f||_p``; exact for p in {1, inf}, for p == 2 the exact *square*."""
    if p == 1:
        return sum((abs(v) for v in f.values), ZERO).scale2(-f.resolution)
    if p == 2:
        return f.data.dot(f.data).scale2(-f.resolution)
    if p == math.inf or p == "inf":
        return max((abs(v) for v in f.values), default=ZERO)
    p = float(p)
    if p <= 0:
        raise ValueError("p must be positive")
    vals = np.abs(f.to_float())
    return float((np.sum(vals ** p) * float(f.cell_length)) ** (1.0 / p))


def l2_norm(f: StepFunction) -> float:
    return math.sqrt(float(lp_norm(f, 2)))


def weak_l1_norm(f: StepFunction, domain: DyadicInterval | None = None) -> float:
    """``sup_t t |{x in domain: |f(x)| > t}|`` (exact breakpoints, float result)."""
    if domain is None:
        return weak_l1_of_cells(f.to_float(), float(f.cell_length))
    if domain.scale < -f.resolution:
        f = f.refine(-domain.scale)
    if not f.window.contains(domain):
        f = f.extend(_hull(f.window, domain))
    lo, hi = _cell_range(f.window, f.resolution, domain)
    return weak_l1_of_cells(f.to_float()[lo:hi], float(f.cell_length))


def weak_l1_of_cells(vals: np.ndarray, cell_length: float) -> float:
    vals = np.sort(np.abs(np.asarray(vals, dtype=float)))[::-1]
    if vals.size == 0 or vals[0] == 0:
        return 0.0
    # just below the r-th largest value the level set holds at least r cells
    counts = np.arange(1, vals.size + 1)
    return float(np.max(vals * counts) * cell_length)


def _hull(a: DyadicInterval, b: DyadicInterval) -> DyadicInterval:
    W = a
    while not W.contains(b):
        W = W.parent()
    return W


def dyadic_maximal(f: StepFunction, depth: int = 16) -> StepFunction:
    """Dyadic Hardy-Littlewood maximal function, restricted to the window.

    Averages are taken over every dyadic interval containing the cell, from the
    cell itself up to ``depth`` levels above the window.
    """
    if any(v.sign() < 0 for v in f.values):
        raise NegativeInput("the maximal function is taken of nonnegative functions")
    nlev = f.window.scale + f.resolution
    a, b, m = f.data.a, f.data.b, f.data.m
    best = [ExactScalar(x, y, m) for x, y in zip(a, b)]
    sa, sb = a.copy(), b.copy()
    for lev in range(1, nlev + 1):
        sa = sa[0::2] + sa[1::2]
        sb = sb[0::2] + sb[1::2]
        span = 1 << lev
        for i, (x, y) in enumerate(zip(sa, sb)):
            avg = ExactScalar(x, y, m + lev)
            for c in range(i * span, (i + 1) * span):
                if avg > best[c]:
                    best[c] = avg
    # intervals above the window only see the same total, so they never win
    return StepFunction(f.window, f.resolution, ExactArray.from_scalars(best))


def walsh_modulate(f: StepFunction, l: int, k: int) -> StepFunction:
    """Multiply ``f`` by ``x -> w_l(2^k x)`` extended with period ``2^-k``."""
    K = f.resolution
    if l and l >= (1 << (K - k)):
        raise ResolutionTooCoarse(f"w_{l}(2^{k}x) is not constant on the cells")
    if l == 0:
        return f
    bits = K - k
    pattern = walsh_signs(l, bits)
    start = f.window.index << (f.window.scale + K)
    idx = (start + np.arange(f.ncells)) % (1 << bits)
    return f * StepFunction(f.window, K, ExactArray.from_ints(pattern[idx]))


# ---------------------------------------------------------------------------
# packet butterfly (fast route)


def _butterfly_up(u: np.ndarray) -> np.ndarray:
    # u has shape (positions, freqs) at one level; merge time pairs
    p, L = u.shape
    v = u.reshape(p // 2, 2, L)
    out = np.empty((p // 2, 2 * L), dtype=u.dtype)
    out[:, 0::2] = v[:, 0, :] + v[:, 1, :]
    out[:, 1::2] = v[:, 0, :] - v[:, 1, :]
    return out


def _butterfly_down(u: np.ndarray) -> np.ndarray:
    p, L = u.shape
    out = np.empty((p, 2, L // 2), dtype=u.dtype)
    out[:, 0, :] = u[:, 0::2] + u[:, 1::2]
    out[:, 1, :] = u[:, 0::2] - u[:, 1::2]
    return out.reshape(2 * p, L // 2)


def _levels_up(values: np.ndarray, nlev: int) -> list[np.ndarray]:
    """Unnormalised packet sums; entry ``[k_local]`` has shape (2^(nlev-k_local), 2^k_local)."""
    u = values.reshape(-1, 1)
    out = [u]
    for _ in range(nlev):
        u = _butterfly_up(u)
        out.append(u)
    return out


class PacketTable:
    """All wave packet coefficients ``<f, phi_P>`` of a step function.

    The coefficient of the tile at time scale ``2^-k`` is the butterfly sum
    times ``2^((k - 2K)/2)``.  Works on exact or float step functions.
    """

    def __init__(self, window: DyadicInterval, resolution: int, values, exact: bool):
        self.window = window
        self.K = resolution
        self.nlev = window.scale + resolution
        self.exact = exact
        if exact:
            self.m = values.m
            self._A = _levels_up(values.a, self.nlev)
            self._B = _levels_up(values.b, self.nlev)
        else:
            self._F = _levels_up(np.asarray(values, dtype=float), self.nlev)

    @classmethod
    def of(cls, f: StepFunction, exact: bool = True) -> PacketTable:
        return cls(f.window, f.resolution, f.data if exact else f.to_float(), exact)

    @classmethod
    def of_float(cls, window: DyadicInterval, resolution: int, values: np.ndarray) -> PacketTable:
        return cls(window, resolution, values, exact=False)

    def _locate(self, k: int, n: int, l: int):
        """(level index, local position, freq, extra scale, sign) or None."""
        W = self.window
        K = self.K
        if k > K or l >= (1 << (K - k)):
            return None
        d = W.scale + k
        if d >= 0:
            if (n >> d) != W.index:
                return None
            return (K - k, n - (W.index << d), l, 0, 1)
        # the tile's time interval is coarser than the window
        e = -d
        if (W.index >> e) != n:
            return None
        rel = W.index - (n << e)
        low = l & ((1 << e) - 1)
        sign = -1 if bin(low & bitrev(rel, e)).count("1") % 2 else 1
        return (self.nlev, 0, l >> e, e, sign)

    def coeff(self, P: Tile):
        if P.k > self.K:
            return self._fine_coeff(P)
        loc = self._locate(P.k, P.n, P.l)
        if loc is None:
            return ZERO if self.exact else 0.0
        lev, pos, freq, e, sign = loc
        k = self.K - lev
        if self.exact:
            c = ExactScalar(sign * self._A[lev][pos, freq], sign * self._B[lev][pos, freq], self.m)
            return c * half_power(k - 2 * self.K - e)
        return sign * float(self._F[lev][pos, freq]) * 2.0 ** ((k - 2 * self.K - e) / 2)

    def _fine_coeff(self, P: Tile):
        # a packet finer than the cells integrates to zero unless l == 0
        if P.l != 0 or not self.window.contains(P.time):
            return ZERO if self.exact else 0.0
        c = (P.n >> (P.k - self.K)) - (self.window.index << self.nlev)
        if self.exact:
            return ExactScalar(self._A[0][c, 0], self._B[0][c, 0], self.m) * half_power(-P.k)
        return float(self._F[0][c, 0]) * 2.0 ** (-P.k / 2)

    def coeffs_float(self, ks: np.ndarray, ns: np.ndarray, ls: np.ndarray) -> np.ndarray:
        """Vectorised float coefficients for tiles inside the window."""
        if self.exact:
            raise TypeError("vectorised access is for float tables")
        out = np.zeros(len(ks), dtype=float)
        W = self.window
        for k in np.unique(ks):
            sel = np.nonzero(ks == k)[0]
            lev = self.K - int(k)
            d = W.scale + int(k)
            if d < 0 or lev < 0:
                for i in sel:
                    out[i] = self.coeff(Tile(int(ks[i]), int(ns[i]), int(ls[i])))
                continue
            pos = ns[sel] - (W.index << d)
            fr = ls[sel]
            ok = (fr < (1 << (self.K - int(k)))) & (pos >= 0) & (pos < (1 << d))
            vals = np.zeros(len(sel))
            vals[ok] = self._F[lev][pos[ok], fr[ok]]
            out[sel] = vals * 2.0 ** ((int(k) - 2 * self.K) / 2)
        return out


def packet_coefficients(f: StepFunction, tiles: Iterable[Tile]) -> dict[Tile, ExactScalar]:
    table = PacketTable.of(f)
    return {P: table.coeff(P) for P in tiles}


def synthesize(coeffs: Mapping[Tile, ExactScalar], window: DyadicInterval, K: int
               ) -> StepFunction:
    """``sum_P c_P phi_P`` as an exact step function on ``window``."""
    nlev = window.scale + K
    per_level: dict[int, list[tuple[int, int, ExactScalar]]] = {}
    for P, c in coeffs.items():
        if not c:
            continue
        if P.k > K or P.l >= (1 << (K - P.k)):
            raise ResolutionTooCoarse(f"{P} is finer than the cells")
        if not window.contains(P.time):
            raise WindowTooSmall(f"{P} sticks out of the window {window}")
        d = window.scale + P.k
        per_level.setdefault(K - P.k, []).append((P.n - (window.index << d), P.l, c * half_power(P.k)))
    if not per_level:
        return StepFunction.zero(window, K)
    m = max(c.m for items in per_level.values() for _, _, c in items)
    va = vb = None
    for lev in range(nlev, -1, -1):
        shape = (1 << (nlev - lev), 1 << lev)
        if va is not None:
            va, vb = _butterfly_down(va), _butterfly_down(vb)
        items = per_level.get(lev)
        if items is None:
            continue
        if va is None:
            va = np.zeros(shape, dtype=object)
            vb = np.zeros(shape, dtype=object)
        for pos, fr, c in items:
            s = m - c.m
            va[pos, fr] += c.a << s
            vb[pos, fr] += c.b << s
    return StepFunction(window, K, ExactArray(va.reshape(-1), vb.reshape(-1), m))


def synthesize_float(window: DyadicInterval, K: int, ks: np.ndarray, ns: np.ndarray,
                     ls: np.ndarray, cs: np.ndarray) -> np.ndarray:
    """Float ``sum_P c_P phi_P``; tiles must sit inside the window."""
    nlev = window.scale + K
    v = None
    for lev in range(nlev, -1, -1):
        if v is not None:
            v = _butterfly_down(v)
        k = K - lev
        sel = np.nonzero(ks == k)[0]
        if sel.size == 0:
            continue
        if v is None:
            v = np.zeros((1 << (nlev - lev), 1 << lev))
        d = window.scale + k
        pos = ns[sel] - (window.index << d)
        np.add.at(v, (pos, ls[sel]), cs[sel] * 2.0 ** (k / 2))
    if v is None:
        return np.zeros(1 << nlev)
    return v.reshape(-1)


# ---------------------------------------------------------------------------
# sets of cells


class ZeroMeasure(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class MeasSet:
    """A union of cells of length ``2**-resolution`` inside ``window``."""

    window: DyadicInterval
    resolution: int
    mask: np.ndarray

    def __post_init__(self):
        n = 1 << (self.window.scale + self.resolution)
        mask = np.asarray(self.mask, dtype=bool)
        if mask.shape != (n,):
            raise ValueError(f"expected {n} cells, got {mask.shape}")
        object.__setattr__(self, "mask", mask)
        self._prefix()

    def _prefix(self):
        object.__setattr__(self, "_cum", np.concatenate([[0], np.cumsum(self.mask, dtype=np.int64)]))

    @classmethod
    def empty(cls, window: DyadicInterval, resolution: int) -> MeasSet:
        return cls(window, resolution, np.zeros(1 << (window.scale + resolution), dtype=bool))

    @classmethod
    def from_interval(cls, window: DyadicInterval, resolution: int, I: DyadicInterval) -> MeasSet:
        mask = np.zeros(1 << (window.scale + resolution), dtype=bool)
        lo, hi = _cell_range(window, resolution, I)
        mask[lo:hi] = True
        return cls(window, resolution, mask)

    @property
    def count(self) -> int:
        return int(self._cum[-1])

    @property
    def measure(self) -> Fraction:
        return Fraction(self.count, 1 << self.resolution) if self.resolution >= 0 \
            else Fraction(self.count << -self.resolution)

    def count_in(self, I: DyadicInterval) -> Fraction:
        """Number of member cells inside ``I`` (fractional if ``I`` is finer than a cell)."""
        if I.scale < -self.resolution:
            c = self.count_in(I.ancestor(-self.resolution))
            return Fraction(c) / (1 << (-self.resolution - I.scale))
        if not self.window.intersects(I):
            return Fraction(0)
        if I.contains(self.window):
            return Fraction(self.count)
        lo, hi = _cell_range(self.window, self.resolution, I)
        return Fraction(int(self._cum[hi] - self._cum[lo]))

    def measure_in(self, I: DyadicInterval) -> Fraction:
        return self.count_in(I) * (Fraction(1, 1 << self.resolution) if self.resolution >= 0
                                   else Fraction(1 << -self.resolution))

    def density(self, I: DyadicInterval) -> Fraction:
        """``|E cap I| / |I|``."""
        return self.measure_in(I) / I.length

    def __and__(self, other: MeasSet) -> MeasSet:
        self._check(other)
        return MeasSet(self.window, self.resolution, self.mask & other.mask)

    def __or__(self, other: MeasSet) -> MeasSet:
        self._check(other)
        return MeasSet(self.window, self.resolution, self.mask | other.mask)

    def __sub__(self, other: MeasSet) -> MeasSet:
        self._check(other)
        return MeasSet(self.window, self.resolution, self.mask & ~other.mask)

    def __eq__(self, other) -> bool:
        return (isinstance(other, MeasSet) and self.window == other.window
                and self.resolution == other.resolution and bool(np.all(self.mask == other.mask)))

    __hash__ = None

    def issubset(self, other: MeasSet) -> bool:
        self._check(other)
        return not np.any(self.mask & ~other.mask)

    def _check(self, other: MeasSet):
        if self.window != other.window or self.resolution != other.resolution:
            raise ValueError("sets live on different grids")

    def indicator(self) -> StepFunction:
        return StepFunction(self.window, self.resolution, ExactArray.from_ints(self.mask.astype(np.int64)))

    def to_json(self) -> dict:
        return {"window": self.window.to_json(), "resolution": self.resolution,
                "cells": np.nonzero(self.mask)[0].tolist()}

    @classmethod
    def from_json(cls, d: Mapping) -> MeasSet:
        W = DyadicInterval.from_json(d["window"])
        K = int(d["resolution"])
        mask = np.zeros(1 << (W.scale + K), dtype=bool)
        mask[np.asarray(d["cells"], dtype=np.int64)] = True
        return cls(W, K, mask)
