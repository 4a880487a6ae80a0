"""Exact scalars in Z[sqrt 2][1/2] and dyadic interval geometry."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

SQRT2 = math.sqrt(2.0)


def _trailing_zeros(v: int) -> int:
    return (v & -v).bit_length() - 1


def _float_of(a: int, b: int, m: int) -> float:
    # a + b*sqrt2 with opposite signs cancels; go through the conjugate instead.
    if a == 0 and b == 0:
        return 0.0
    if (a >= 0) == (b >= 0) or a == 0 or b == 0:
        val = float(a) + float(b) * SQRT2
    else:
        num = a * a - 2 * b * b
        val = float(num) / (float(a) - float(b) * SQRT2)
    return math.ldexp(val, -m)


def _sign_of(a: int, b: int) -> int:
    if a >= 0 and b >= 0:
        return 1 if (a or b) else 0
    if a <= 0 and b <= 0:
        return -1
    # opposite signs: the larger of a^2 and 2 b^2 decides
    return (1 if a > 0 else -1) if a * a > 2 * b * b else (1 if b > 0 else -1)


class ExactScalar:
    """The number ``(a + b*sqrt(2)) * 2**(-m)`` held in canonical form.

    Canonical means ``a`` or ``b`` is odd, or the value is zero with ``m == 0``.
    Two canonical scalars are equal iff their triples are equal.
    """

    __slots__ = ("a", "b", "m")

    def __init__(self, a: int = 0, b: int = 0, m: int = 0) -> None:
        a = int(a)
        b = int(b)
        m = int(m)
        if a == 0 and b == 0:
            m = 0
        else:
            tz = _trailing_zeros(a | b)
            if tz:
                a >>= tz
                b >>= tz
                m -= tz
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "m", m)

    def __setattr__(self, name, value):
        raise AttributeError("ExactScalar is immutable")

    # construction -------------------------------------------------------
    @classmethod
    def from_value(cls, x: int | Fraction | ExactScalar) -> ExactScalar:
        if isinstance(x, ExactScalar):
            return x
        if isinstance(x, int):
            return cls(x, 0, 0)
        if isinstance(x, Fraction):
            den = x.denominator
            if den & (den - 1):
                raise ValueError(f"{x} is not a dyadic rational")
            return cls(x.numerator, 0, den.bit_length() - 1)
        raise TypeError(f"cannot convert {type(x).__name__} to ExactScalar")

    @classmethod
    def from_json(cls, triple) -> ExactScalar:
        a, b, m = triple
        return cls(a, b, m)

    def to_json(self) -> list[int]:
        return [self.a, self.b, self.m]

    # arithmetic ---------------------------------------------------------
    def _coerce(self, other) -> ExactScalar | None:
        if isinstance(other, ExactScalar):
            return other
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return ExactScalar.from_value(other)
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        m = max(self.m, o.m)
        s1 = m - self.m
        s2 = m - o.m
        return ExactScalar((self.a << s1) + (o.a << s2), (self.b << s1) + (o.b << s2), m)

    __radd__ = __add__

    def __neg__(self) -> ExactScalar:
        return ExactScalar(-self.a, -self.b, self.m)

    def __pos__(self) -> ExactScalar:
        return self

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o + (-self)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        a, b, c, d = self.a, self.b, o.a, o.b
        return ExactScalar(a * c + 2 * b * d, a * d + b * c, self.m + o.m)

    __rmul__ = __mul__

    def scale2(self, e: int) -> ExactScalar:
        """Multiply by ``2**e``."""
        return ExactScalar(self.a, self.b, self.m - e)

    def mul_sqrt2(self) -> ExactScalar:
        return ExactScalar(2 * self.b, self.a, self.m)

    def conjugate(self) -> ExactScalar:
        """Galois conjugate ``a - b*sqrt2``."""
        return ExactScalar(self.a, -self.b, self.m)

    def square(self) -> ExactScalar:
        return self * self

    def __abs__(self) -> ExactScalar:
        return -self if self.sign() < 0 else self

    # comparison ---------------------------------------------------------
    def sign(self) -> int:
        return _sign_of(self.a, self.b)

    def __eq__(self, other) -> bool:
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self.a == o.a and self.b == o.b and self.m == o.m

    def __hash__(self) -> int:
        return hash((self.a, self.b, self.m))

    def __lt__(self, other) -> bool:
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return (self - o).sign() < 0

    def __le__(self, other) -> bool:
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return (self - o).sign() <= 0

    def __gt__(self, other) -> bool:
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return (self - o).sign() > 0

    def __ge__(self, other) -> bool:
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return (self - o).sign() >= 0

    def __bool__(self) -> bool:
        return bool(self.a or self.b)

    # conversion ---------------------------------------------------------
    def __float__(self) -> float:
        return _float_of(self.a, self.b, self.m)

    def is_rational(self) -> bool:
        return self.b == 0

    def to_fraction(self) -> Fraction:
        if self.b:
            raise ValueError(f"{self} is irrational")
        return Fraction(self.a, 1) / (Fraction(2) ** self.m)

    def __repr__(self) -> str:
        return f"ExactScalar({self.a}, {self.b}, {self.m})"

    def __str__(self) -> str:
        core = f"{self.a}{self.b:+d}√2" if self.b else f"{self.a}"
        return core if self.m == 0 else f"({core})·2^{-self.m}"


ZERO = ExactScalar(0, 0, 0)
ONE = ExactScalar(1, 0, 0)


def canonicalize(x: ExactScalar) -> ExactScalar:
    # construction already canonicalizes; kept as an explicit entry point
    return ExactScalar(x.a, x.b, x.m)


def scalar_arith(x: ExactScalar, y: ExactScalar | None, op: str) -> ExactScalar:
    if op == "add":
        return x + y
    if op == "mul":
        return x * y
    if op == "neg":
        return -x
    raise ValueError(f"unknown op {op!r}")


def half_power(k: int) -> ExactScalar:
    """Return ``2**(k/2)`` exactly."""
    if k % 2 == 0:
        return ExactScalar(1, 0, -(k // 2))
    return ExactScalar(0, 1, -((k - 1) // 2))


# ---------------------------------------------------------------------------
# vectorised exact values


def _as_obj(x) -> np.ndarray:
    arr = np.asarray(x)
    if arr.dtype == object:
        return arr
    if arr.dtype.kind not in "iub":
        raise TypeError(f"exact arrays need integer input, got {arr.dtype}")
    return arr.astype(np.int64).astype(object)


class ExactArray:
    """An array of values ``(a + b*sqrt2) * 2**(-m)`` sharing one exponent.

    ``a`` and ``b`` are numpy object arrays of python ints so nothing overflows.
    """

    __slots__ = ("a", "b", "m")

    def __init__(self, a, b=None, m: int = 0, *, canonical: bool = True) -> None:
        a = _as_obj(a)
        b = np.zeros(a.shape, dtype=object) if b is None else _as_obj(b)
        if b.shape != a.shape:
            raise ValueError("shape mismatch between rational and sqrt2 parts")
        m = int(m)
        if canonical:
            acc = 0
            for v in a.flat:
                acc |= v
            for v in b.flat:
                acc |= v
            if acc == 0:
                m = 0
            else:
                tz = _trailing_zeros(acc)
                if tz:
                    a = a // (1 << tz)
                    b = b // (1 << tz)
                    m -= tz
        self.a = a
        self.b = b
        self.m = m

    @classmethod
    def zeros(cls, shape) -> ExactArray:
        return cls(np.zeros(shape, dtype=object), None, 0)

    @classmethod
    def from_scalars(cls, values) -> ExactArray:
        vals = [ExactScalar.from_value(v) for v in values]
        if not vals:
            return cls.zeros((0,))
        m = max(v.m for v in vals)
        a = np.array([v.a << (m - v.m) for v in vals] + [0], dtype=object)[:-1]
        b = np.array([v.b << (m - v.m) for v in vals] + [0], dtype=object)[:-1]
        return cls(a, b, m)

    @classmethod
    def from_ints(cls, values) -> ExactArray:
        return cls(values, None, 0)

    @property
    def shape(self):
        return self.a.shape

    def __len__(self) -> int:
        return len(self.a)

    def rescaled(self, m: int) -> tuple[np.ndarray, np.ndarray]:
        """Numerators over the common exponent ``m >= self.m``."""
        s = m - self.m
        if s < 0:
            raise ValueError("can only rescale to a larger exponent")
        if s == 0:
            return self.a, self.b
        f = 1 << s
        return self.a * f, self.b * f

    def __getitem__(self, idx):
        if isinstance(idx, (int, np.integer)):
            return ExactScalar(self.a[idx], self.b[idx], self.m)
        return ExactArray(self.a[idx], self.b[idx], self.m)

    def scalars(self) -> list[ExactScalar]:
        return [ExactScalar(x, y, self.m) for x, y in zip(self.a.flat, self.b.flat)]

    def __add__(self, other: ExactArray) -> ExactArray:
        m = max(self.m, other.m)
        a1, b1 = self.rescaled(m)
        a2, b2 = other.rescaled(m)
        return ExactArray(a1 + a2, b1 + b2, m)

    def __neg__(self) -> ExactArray:
        return ExactArray(-self.a, -self.b, self.m, canonical=False)

    def __sub__(self, other: ExactArray) -> ExactArray:
        return self + (-other)

    def __mul__(self, other) -> ExactArray:
        if isinstance(other, ExactArray):
            a, b, c, d = self.a, self.b, other.a, other.b
            return ExactArray(a * c + 2 * b * d, a * d + b * c, self.m + other.m)
        o = ExactScalar.from_value(other)
        return ExactArray(
            self.a * o.a + 2 * self.b * o.b, self.a * o.b + self.b * o.a, self.m + o.m
        )

    __rmul__ = __mul__

    def sum(self) -> ExactScalar:
        return ExactScalar(int(self.a.sum()) if self.a.size else 0,
                           int(self.b.sum()) if self.b.size else 0, self.m)

    def dot(self, other: ExactArray) -> ExactScalar:
        a, b, c, d = self.a, self.b, other.a, other.b
        if a.size == 0:
            return ZERO
        ra = int(np.dot(a, c)) + 2 * int(np.dot(b, d))
        rb = int(np.dot(a, d)) + int(np.dot(b, c))
        return ExactScalar(ra, rb, self.m + other.m)

    def to_float(self) -> np.ndarray:
        a = self.a.astype(float)
        b = self.b.astype(float)
        return np.ldexp(a + SQRT2 * b, -self.m)

    def signs(self) -> np.ndarray:
        return np.array([_sign_of(x, y) for x, y in zip(self.a.flat, self.b.flat)],
                        dtype=np.int64).reshape(self.a.shape)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ExactArray):
            return NotImplemented
        return (self.shape == other.shape and self.m == other.m
                and bool(np.all(self.a == other.a)) and bool(np.all(self.b == other.b)))

    __hash__ = None

    def __repr__(self) -> str:
        return f"ExactArray(shape={self.shape}, m={self.m})"


# ---------------------------------------------------------------------------
# dyadic intervals


class Relation(enum.Enum):
    EQUAL = "equal"
    SUBSET = "I⊊J"
    SUPERSET = "J⊊I"
    DISJOINT = "disjoint"


@dataclass(frozen=True, slots=True)
class DyadicInterval:
    """The half-open interval ``[index * 2**scale, (index + 1) * 2**scale)``."""

    scale: int
    index: int

    @property
    def length(self) -> Fraction:
        return Fraction(2) ** self.scale

    @property
    def start(self) -> Fraction:
        return self.index * self.length

    @property
    def end(self) -> Fraction:
        return (self.index + 1) * self.length

    def ancestor(self, scale: int) -> DyadicInterval:
        if scale < self.scale:
            raise ValueError("ancestor must be at a coarser scale")
        return DyadicInterval(scale, self.index >> (scale - self.scale))

    def parent(self) -> DyadicInterval:
        return DyadicInterval(self.scale + 1, self.index >> 1)

    def children(self) -> tuple[DyadicInterval, DyadicInterval]:
        return (DyadicInterval(self.scale - 1, 2 * self.index),
                DyadicInterval(self.scale - 1, 2 * self.index + 1))

    def contains(self, other: DyadicInterval) -> bool:
        """``other ⊆ self``."""
        d = self.scale - other.scale
        return d >= 0 and (other.index >> d) == self.index

    def intersects(self, other: DyadicInterval) -> bool:
        return self.contains(other) or other.contains(self)

    def contains_point(self, x: Fraction) -> bool:
        return self.start <= x < self.end

    def to_json(self) -> list[int]:
        return [self.scale, self.index]

    @classmethod
    def from_json(cls, pair) -> DyadicInterval:
        return cls(int(pair[0]), int(pair[1]))

    @classmethod
    def from_endpoints(cls, a, b) -> DyadicInterval:
        a, b = Fraction(a), Fraction(b)
        length = b - a
        if length <= 0:
            raise ValueError(f"empty interval [{a}, {b})")
        num, den = length.numerator, length.denominator
        if num & (num - 1) or den & (den - 1) or (num != 1 and den != 1):
            raise ValueError(f"[{a}, {b}) does not have dyadic length")
        scale = (num.bit_length() - 1) - (den.bit_length() - 1)
        q = a / length
        if q.denominator != 1:
            raise ValueError(f"[{a}, {b}) is not aligned to its length")
        return cls(scale, int(q))

    def __str__(self) -> str:
        return f"[{self.start}, {self.end})"


def interval_relate(I: DyadicInterval, J: DyadicInterval) -> Relation:
    if I.scale == J.scale:
        return Relation.EQUAL if I.index == J.index else Relation.DISJOINT
    if I.scale < J.scale:
        return Relation.SUBSET if J.contains(I) else Relation.DISJOINT
    return Relation.SUPERSET if I.contains(J) else Relation.DISJOINT


def common_ancestor(intervals) -> DyadicInterval:
    """Smallest dyadic interval containing every interval given."""
    it = iter(intervals)
    try:
        root = next(it)
    except StopIteration:
        raise ValueError("no intervals") from None
    for iv in it:
        s = max(root.scale, iv.scale)
        a, b = root.ancestor(s), iv.ancestor(s)
        while a != b:
            a, b = a.parent(), b.parent()
        root = a
    return root
