"""Outward-rounded interval arithmetic on binary64 endpoints.

Every operation returns an interval that contains the exact set image of
its operands (enclosure soundness). CPython has no access to the FPU
rounding mode, so directed rounding is emulated: each endpoint op is
computed in round-to-nearest and then nudged one ulp outward with
``math.nextafter`` unless the result is provably exact. Exactness is
detected cheaply (error-free transformations for sums, power-of-two
factors for products and quotients), which keeps common cases like
``[1,2] + [3,4]`` or ``0.5 * [1.9, 2.1]`` tight to the last bit.

The empty interval is a distinct singleton ``EMPTY``; binary operations
propagate it. Endpoints are extended reals: -inf/+inf mark unbounded
sides. NaN endpoints never appear outside the sentinel.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import IntervalDomainError

_INF = math.inf
_NAN = math.nan
_MAX = math.nextafter(_INF, 0.0)
_DBL_MIN = 2.2250738585072014e-308
_TWOSUM_GUARD = 8.9e307


def next_up(x: float) -> float:
    return math.nextafter(x, _INF)


def next_down(x: float) -> float:
    return math.nextafter(x, -_INF)


# ---------------------------------------------------------------------------
# directed endpoint arithmetic


def add_up(a: float, b: float) -> float:
    s = a + b
    if s != s:  # inf + -inf; unbounded either way, +inf is the sound upper bound
        return _INF
    if math.isinf(s):
        if s > 0.0 or math.isinf(a) or math.isinf(b):
            return s
        return -_MAX  # finite operands overflowed downward; true sum exceeds -inf
    if abs(s) > _TWOSUM_GUARD:
        return next_up(s)
    # TwoSum error term; exact in round-to-nearest binary64
    bb = s - a
    err = (a - (s - bb)) + (b - bb)
    if err > 0.0:
        return next_up(s)
    return s


def add_down(a: float, b: float) -> float:
    s = a + b
    if s != s:
        return -_INF
    if math.isinf(s):
        if s < 0.0 or math.isinf(a) or math.isinf(b):
            return s
        return _MAX
    if abs(s) > _TWOSUM_GUARD:
        return next_down(s)
    bb = s - a
    err = (a - (s - bb)) + (b - bb)
    if err < 0.0:
        return next_down(s)
    return s


def sub_up(a: float, b: float) -> float:
    return add_up(a, -b)


def sub_down(a: float, b: float) -> float:
    return add_down(a, -b)


def _is_pow2(x: float) -> bool:
    m = math.frexp(x)[0]
    return m == 0.5 or m == -0.5


def _mul_is_exact(a: float, b: float, p: float) -> bool:
    if a == 0.0 or b == 0.0:
        return True
    if math.isinf(a) or math.isinf(b):
        return True  # true extended-real product (nan was filtered by callers)
    if math.isinf(p) or abs(p) < _DBL_MIN:
        return False  # overflow or (sub)normal underflow can hide dropped bits
    if _is_pow2(a) or _is_pow2(b):
        return True
    if abs(p) < 9.007199254740992e15 and a.is_integer() and b.is_integer():
        return int(a) * int(b) == int(p)
    return False


# mul_up/mul_down lay out the ordinary finite-product case first; the
# decision table is identical to _mul_is_exact, which stays as the oracle
# the property tests compare against.


def mul_up(a: float, b: float) -> float:
    p = a * b
    if _DBL_MIN <= abs(p) < _INF:
        m = math.frexp(a)[0]
        if m == 0.5 or m == -0.5:
            return p
        m = math.frexp(b)[0]
        if m == 0.5 or m == -0.5:
            return p
        if (
            abs(p) < 9.007199254740992e15
            and a.is_integer()
            and b.is_integer()
            and int(a) * int(b) == int(p)
        ):
            return p
        return math.nextafter(p, _INF)
    if p != p:  # 0 * inf: the zero factor wins for set images
        return 0.0
    if a == 0.0 or b == 0.0 or math.isinf(a) or math.isinf(b):
        return p
    return math.nextafter(p, _INF)  # overflow or underflow with finite operands


def mul_down(a: float, b: float) -> float:
    p = a * b
    if _DBL_MIN <= abs(p) < _INF:
        m = math.frexp(a)[0]
        if m == 0.5 or m == -0.5:
            return p
        m = math.frexp(b)[0]
        if m == 0.5 or m == -0.5:
            return p
        if (
            abs(p) < 9.007199254740992e15
            and a.is_integer()
            and b.is_integer()
            and int(a) * int(b) == int(p)
        ):
            return p
        return math.nextafter(p, -_INF)
    if p != p:
        return 0.0
    if a == 0.0 or b == 0.0 or math.isinf(a) or math.isinf(b):
        return p
    return math.nextafter(p, -_INF)


def _div_is_exact(a: float, b: float, q: float) -> bool:
    if a == 0.0:
        return True
    if math.isinf(b) or math.isinf(a):
        return True
    if math.isinf(q) or abs(q) < _DBL_MIN:
        return False
    return _is_pow2(b)


def div_up(a: float, b: float) -> float:
    q = a / b
    if q != q:
        return 0.0 if a == 0.0 else _INF
    if _div_is_exact(a, b, q):
        return q
    return next_up(q)


def div_down(a: float, b: float) -> float:
    q = a / b
    if q != q:
        return 0.0 if a == 0.0 else -_INF
    if _div_is_exact(a, b, q):
        return q
    return next_down(q)


def _sqrt_side(x: float, r: float) -> int:
    """Sign of r*r - x in exact arithmetic (0 when r is the exact root)."""
    if x == 0.0 or math.isinf(r):
        return 0
    d = Fraction(r) * Fraction(r) - Fraction(x)
    if d == 0:
        return 0
    return 1 if d > 0 else -1


def sqrt_up(x: float) -> float:
    r = math.sqrt(x)
    if _sqrt_side(x, r) >= 0:
        return r
    return next_up(r)


def sqrt_down(x: float) -> float:
    r = math.sqrt(x)
    if _sqrt_side(x, r) <= 0:
        return r
    return next_down(r)


def pow_up(x: float, k: int) -> float:
    """Upper bound on x**k for integer k >= 1 by rounded binary exponentiation."""
    if k == 1:
        return x
    if x < 0.0:
        if k % 2 == 0:
            return pow_up(-x, k)
        return -pow_down(-x, k)
    acc = 1.0
    base = x
    n = k
    while n:
        if n & 1:
            acc = mul_up(acc, base)
        n >>= 1
        if n:
            base = mul_up(base, base)
    return acc


def pow_down(x: float, k: int) -> float:
    if k == 1:
        return x
    if x < 0.0:
        if k % 2 == 0:
            return pow_down(-x, k)
        return -pow_up(-x, k)
    acc = 1.0
    base = x
    n = k
    while n:
        if n & 1:
            acc = mul_down(acc, base)
        n >>= 1
        if n:
            base = mul_down(base, base)
    return acc


# ---------------------------------------------------------------------------
# intervals


class Interval:
    """Closed interval [lo, hi] of extended reals, or the EMPTY sentinel."""

    __slots__ = ("lo", "hi")

    def __init__(self, lo: float, hi: float):
        lo = float(lo)
        hi = float(hi)
        if not lo <= hi:  # also rejects NaN endpoints
            raise ValueError(f"invalid interval endpoints [{lo}, {hi}]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    def __setattr__(self, name, value):
        raise AttributeError("Interval is immutable")

    # EMPTY is created below by bypassing __init__.

    @property
    def is_empty(self) -> bool:
        return self.lo != self.lo

    @staticmethod
    def point(x: float) -> "Interval":
        return Interval(x, x)

    @staticmethod
    def around(center: float, radius: float) -> "Interval":
        """Outward enclosure of [center - radius, center + radius]."""
        if radius < 0.0:
            raise ValueError("radius must be nonnegative")
        return Interval(sub_down(center, radius), add_up(center, radius))

    # -- queries ------------------------------------------------------------

    def contains(self, x: float) -> bool:
        return (not self.is_empty) and self.lo <= x <= self.hi

    def contains_interval(self, other: "Interval") -> bool:
        if other.is_empty:
            return True
        if self.is_empty:
            return False
        return self.lo <= other.lo and other.hi <= self.hi

    def strictly_contains(self, other: "Interval") -> bool:
        if other.is_empty:
            return not self.is_empty
        if self.is_empty:
            return False
        return self.lo < other.lo and other.hi < self.hi

    def overlaps(self, other: "Interval") -> bool:
        if self.is_empty or other.is_empty:
            return False
        return self.lo <= other.hi and other.lo <= self.hi

    def midpoint(self) -> float:
        """A representable point inside the interval."""
        if self.is_empty:
            raise ValueError("empty interval has no midpoint")
        if self.lo == -_INF and self.hi == _INF:
            return 0.0
        if self.lo == -_INF:
            return min(self.hi, -_MAX) if self.hi < 0 else min(0.0, self.hi)
        if self.hi == _INF:
            return max(self.lo, _MAX) if self.lo > 0 else max(0.0, self.lo)
        m = 0.5 * self.lo + 0.5 * self.hi
        if not (self.lo <= m <= self.hi):
            m = self.lo + 0.5 * (self.hi - self.lo)
        return min(max(m, self.lo), self.hi)

    def width_up(self) -> float:
        if self.is_empty:
            return 0.0
        return sub_up(self.hi, self.lo)

    def radius_up(self) -> float:
        if self.is_empty:
            return 0.0
        return mul_up(0.5, sub_up(self.hi, self.lo))

    def mag(self) -> float:
        """max |x| over the interval (exact; abs and max do not round)."""
        if self.is_empty:
            return 0.0
        return max(abs(self.lo), abs(self.hi))

    def mig(self) -> float:
        """min |x| over the interval."""
        if self.is_empty:
            return 0.0
        if self.lo <= 0.0 <= self.hi:
            return 0.0
        return min(abs(self.lo), abs(self.hi))

    # -- lattice ------------------------------------------------------------

    def intersect(self, other: "Interval") -> "Interval":
        if self.is_empty or other.is_empty:
            return EMPTY
        lo = max(self.lo, other.lo)
        hi = min(self.hi, other.hi)
        if lo > hi:
            return EMPTY
        return Interval(lo, hi)

    def hull(self, other: "Interval") -> "Interval":
        if self.is_empty:
            return other
        if other.is_empty:
            return self
        return Interval(min(self.lo, other.lo), max(self.hi, other.hi))

    def inflate(self, r: float) -> "Interval":
        if self.is_empty:
            return EMPTY
        return Interval(sub_down(self.lo, r), add_up(self.hi, r))

    # -- arithmetic ---------------------------------------------------------

    def __add__(self, other):
        if not isinstance(other, Interval):
            other = _coerce(other)
        if self.is_empty or other.is_empty:
            return EMPTY
        return Interval(add_down(self.lo, other.lo), add_up(self.hi, other.hi))

    __radd__ = __add__

    def __neg__(self):
        if self.is_empty:
            return EMPTY
        return Interval(-self.hi, -self.lo)

    def __sub__(self, other):
        other = _coerce(other)
        if self.is_empty or other.is_empty:
            return EMPTY
        return Interval(sub_down(self.lo, other.hi), sub_up(self.hi, other.lo))

    def __rsub__(self, other):
        return _coerce(other).__sub__(self)

    def __mul__(self, other):
        if not isinstance(other, Interval):
            other = _coerce(other)
        if self.is_empty or other.is_empty:
            return EMPTY
        a, b = self.lo, self.hi
        c, d = other.lo, other.hi
        # sign-case analysis; directed rounding keeps each case an enclosure
        if a >= 0.0:
            if c >= 0.0:
                return Interval(mul_down(a, c), mul_up(b, d))
            if d <= 0.0:
                return Interval(mul_down(b, c), mul_up(a, d))
            return Interval(mul_down(b, c), mul_up(b, d))
        if b <= 0.0:
            if c >= 0.0:
                return Interval(mul_down(a, d), mul_up(b, c))
            if d <= 0.0:
                return Interval(mul_down(b, d), mul_up(a, c))
            return Interval(mul_down(a, d), mul_up(a, c))
        if c >= 0.0:
            return Interval(mul_down(a, d), mul_up(b, d))
        if d <= 0.0:
            return Interval(mul_down(b, c), mul_up(a, c))
        return Interval(
            min(mul_down(a, d), mul_down(b, c)),
            max(mul_up(a, c), mul_up(b, d)),
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _coerce(other)
        if self.is_empty or other.is_empty:
            return EMPTY
        if other.lo <= 0.0 <= other.hi:
            raise IntervalDomainError(f"division by interval containing zero: {other}")
        a, b, c, d = self.lo, self.hi, other.lo, other.hi
        lo = min(div_down(a, c), div_down(a, d), div_down(b, c), div_down(b, d))
        hi = max(div_up(a, c), div_up(a, d), div_up(b, c), div_up(b, d))
        return Interval(lo, hi)

    def __rtruediv__(self, other):
        return _coerce(other).__truediv__(self)

    def sqrt(self) -> "Interval":
        if self.is_empty:
            return EMPTY
        if self.lo < 0.0:
            raise IntervalDomainError(f"sqrt of interval reaching below zero: {self}")
        return Interval(sqrt_down(self.lo), sqrt_up(self.hi))

    def square(self) -> "Interval":
        return self.power(2)

    def power(self, k: int) -> "Interval":
        """Tight monomial x**k over the interval (even powers land in [0, inf))."""
        if not isinstance(k, int):
            raise TypeError("exponent must be an integer")
        if self.is_empty:
            return EMPTY
        if k == 0:
            return Interval(1.0, 1.0)
        if k < 0:
            return Interval(1.0, 1.0) / self.power(-k)
        if k % 2 == 0:
            hi = pow_up(self.mag(), k)
            m = self.mig()
            lo = 0.0 if m == 0.0 else pow_down(m, k)
            return Interval(lo, hi)
        return Interval(pow_down(self.lo, k), pow_up(self.hi, k))

    # -- plumbing -----------------------------------------------------------

    def __eq__(self, other):
        if not isinstance(other, Interval):
            return NotImplemented
        if self.is_empty or other.is_empty:
            return self.is_empty and other.is_empty
        return self.lo == other.lo and self.hi == other.hi

    def __hash__(self):
        if self.is_empty:
            return hash("certsurf-empty-interval")
        return hash((self.lo, self.hi))

    def __repr__(self):
        if self.is_empty:
            return "Interval.EMPTY"
        return f"[{self.lo!r}, {self.hi!r}]"


EMPTY: Interval = Interval.__new__(Interval)
object.__setattr__(EMPTY, "lo", math.nan)
object.__setattr__(EMPTY, "hi", math.nan)
Interval.EMPTY = EMPTY  # type: ignore[attr-defined]


def _coerce(x) -> Interval:
    if isinstance(x, Interval):
        return x
    if isinstance(x, (int, float)):
        return Interval.point(float(x))
    raise TypeError(f"cannot interpret {type(x).__name__} as an interval")


# ---------------------------------------------------------------------------
# boxes


class IntervalBox:
    """A finite product of intervals. Empty if any component is empty."""

    __slots__ = ("parts",)

    def __init__(self, parts: Iterable[Interval]):
        object.__setattr__(self, "parts", tuple(parts))
        for p in self.parts:
            if not isinstance(p, Interval):
                raise TypeError("IntervalBox components must be Interval")

    def __setattr__(self, name, value):
        raise AttributeError("IntervalBox is immutable")

    @staticmethod
    def from_center_radii(center: Sequence[float], radii: Sequence[float]) -> "IntervalBox":
        if len(center) != len(radii):
            raise ValueError("center/radii length mismatch")
        return IntervalBox(Interval.around(c, r) for c, r in zip(center, radii))

    @staticmethod
    def point(coords: Sequence[float]) -> "IntervalBox":
        return IntervalBox(Interval.point(c) for c in coords)

    @property
    def dim(self) -> int:
        return len(self.parts)

    @property
    def is_empty(self) -> bool:
        return any(p.is_empty for p in self.parts)

    def __getitem__(self, i: int) -> Interval:
        return self.parts[i]

    def __iter__(self):
        return iter(self.parts)

    def __len__(self):
        return len(self.parts)

    def intersect(self, other: "IntervalBox") -> "IntervalBox":
        if self.dim != other.dim:
            raise ValueError("dimension mismatch")
        return IntervalBox(a.intersect(b) for a, b in zip(self.parts, other.parts))

    def hull(self, other: "IntervalBox") -> "IntervalBox":
        if self.dim != other.dim:
            raise ValueError("dimension mismatch")
        return IntervalBox(a.hull(b) for a, b in zip(self.parts, other.parts))

    def contains_point(self, coords: Sequence[float]) -> bool:
        return all(p.contains(x) for p, x in zip(self.parts, coords))

    def contains_box(self, other: "IntervalBox") -> bool:
        return all(a.contains_interval(b) for a, b in zip(self.parts, other.parts))

    def overlaps(self, other: "IntervalBox") -> bool:
        return all(a.overlaps(b) for a, b in zip(self.parts, other.parts))

    def midpoint(self) -> list[float]:
        return [p.midpoint() for p in self.parts]

    def radii_up(self) -> list[float]:
        return [p.radius_up() for p in self.parts]

    def inflate(self, r: float) -> "IntervalBox":
        return IntervalBox(p.inflate(r) for p in self.parts)

    def norm_up(self) -> float:
        """Upper bound on the sup norm over the box."""
        if self.is_empty:
            return 0.0
        return max((p.mag() for p in self.parts), default=0.0)

    def sub_point(self, coords: Sequence[float]) -> "IntervalBox":
        return IntervalBox(p - Interval.point(c) for p, c in zip(self.parts, coords))

    def concat(self, other: "IntervalBox") -> "IntervalBox":
        return IntervalBox(self.parts + other.parts)

    def __eq__(self, other):
        if not isinstance(other, IntervalBox):
            return NotImplemented
        return self.parts == other.parts

    def __hash__(self):
        return hash(self.parts)

    def __repr__(self):
        return "IntervalBox(" + ", ".join(repr(p) for p in self.parts) + ")"


# ---------------------------------------------------------------------------
# interval matrices


class IntervalMatrix:
    """Dense rows-of-intervals matrix with outward-rounded products."""

    __slots__ = ("rows",)

    def __init__(self, rows: Iterable[Iterable[Interval]]):
        object.__setattr__(self, "rows", tuple(tuple(r) for r in rows))
        if self.rows:
            w = len(self.rows[0])
            for r in self.rows:
                if len(r) != w:
                    raise ValueError("ragged interval matrix")

    def __setattr__(self, name, value):
        raise AttributeError("IntervalMatrix is immutable")

    @staticmethod
    def from_floats(mat) -> "IntervalMatrix":
        return IntervalMatrix([[Interval.point(float(x)) for x in row] for row in mat])

    @staticmethod
    def identity(n: int) -> "IntervalMatrix":
        return IntervalMatrix(
            [[Interval.point(1.0 if i == j else 0.0) for j in range(n)] for i in range(n)]
        )

    @property
    def shape(self) -> tuple[int, int]:
        return (len(self.rows), len(self.rows[0]) if self.rows else 0)

    def __getitem__(self, idx):
        i, j = idx
        return self.rows[i][j]

    def row(self, i: int) -> tuple[Interval, ...]:
        return self.rows[i]

    def transpose(self) -> "IntervalMatrix":
        m, n = self.shape
        return IntervalMatrix([[self.rows[i][j] for i in range(m)] for j in range(n)])

    def __add__(self, other: "IntervalMatrix") -> "IntervalMatrix":
        if self.shape != other.shape:
            raise ValueError("shape mismatch")
        return IntervalMatrix(
            [[a + b for a, b in zip(ra, rb)] for ra, rb in zip(self.rows, other.rows)]
        )

    def __sub__(self, other: "IntervalMatrix") -> "IntervalMatrix":
        if self.shape != other.shape:
            raise ValueError("shape mismatch")
        return IntervalMatrix(
            [[a - b for a, b in zip(ra, rb)] for ra, rb in zip(self.rows, other.rows)]
        )

    def __neg__(self) -> "IntervalMatrix":
        return IntervalMatrix([[-a for a in row] for row in self.rows])

    def matvec(self, vec: IntervalBox | Sequence[float]) -> IntervalBox:
        if not isinstance(vec, IntervalBox):
            vec = IntervalBox.point([float(x) for x in vec])
        m, n = self.shape
        if vec.dim != n:
            raise ValueError("shape mismatch")
        out = []
        for row in self.rows:
            # endpoint accumulators avoid per-term Interval churn
            acc_lo = 0.0
            acc_hi = 0.0
            for a, x in zip(row, vec.parts):
                t = a * x
                if t.lo != t.lo:
                    acc_lo = _NAN
                    break
                acc_lo = add_down(acc_lo, t.lo)
                acc_hi = add_up(acc_hi, t.hi)
            out.append(EMPTY if acc_lo != acc_lo else Interval(acc_lo, acc_hi))
        return IntervalBox(out)

    def matmul(self, other: "IntervalMatrix") -> "IntervalMatrix":
        m, n = self.shape
        n2, p = other.shape
        if n != n2:
            raise ValueError("shape mismatch")
        cols = other.transpose().rows
        out = []
        for row in self.rows:
            out_row = []
            for col in cols:
                acc_lo = 0.0
                acc_hi = 0.0
                for a, b in zip(row, col):
                    t = a * b
                    if t.lo != t.lo:
                        acc_lo = _NAN
                        break
                    acc_lo = add_down(acc_lo, t.lo)
                    acc_hi = add_up(acc_hi, t.hi)
                out_row.append(EMPTY if acc_lo != acc_lo else Interval(acc_lo, acc_hi))
            out.append(out_row)
        return IntervalMatrix(out)

    def __matmul__(self, other):
        if isinstance(other, IntervalMatrix):
            return self.matmul(other)
        if isinstance(other, IntervalBox):
            return self.matvec(other)
        return NotImplemented

    def mag_rows(self) -> list[list[float]]:
        return [[a.mag() for a in row] for row in self.rows]

    def norm_inf_up(self) -> float:
        """Upper bound on the max absolute row sum over all point matrices inside."""
        worst = 0.0
        for row in self.rows:
            s = 0.0
            for a in row:
                s = add_up(s, a.mag())
            worst = max(worst, s)
        return worst

    def __repr__(self):
        return "IntervalMatrix(%s)" % (self.rows,)


def dot_up_mag(row: Sequence[Interval], radii: Sequence[float]) -> float:
    """Upper bound on sum_i mag(row_i) * radii_i (all radii nonnegative)."""
    s = 0.0
    for a, r in zip(row, radii):
        s = add_up(s, mul_up(a.mag(), r))
    return s
