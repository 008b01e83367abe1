"""Elements 2^-n (a_0 + a_1 theta + ... + a_{k-1} theta^{k-1}) of Q(theta)."""
from __future__ import annotations

from fractions import Fraction
from functools import total_ordering

from ..errors import RingMismatch, Indeterminate
from .interval import Interval
from .dyadic import DyadicRational

DEFAULT_WIDTH = Fraction(1, 2 ** 64)


def _dyadic_mid(lo: Fraction, hi: Fraction) -> Fraction:
    return (lo + hi) / 2


class AlgebraicField:
    """Q(theta) for a monic integer minimal polynomial.

    ``minpoly`` lists coefficients from the constant term up, the leading
    one included. ``enclosure`` is a rational interval isolating theta
    (the polynomial must change sign across it).
    """

    def __init__(self, minpoly, enclosure, name: str = "theta"):
        minpoly = [int(c) for c in minpoly]
        if len(minpoly) < 3:
            raise ValueError("degree must be at least 2")
        if minpoly[-1] != 1:
            raise ValueError("minimal polynomial must be monic (integral basis needed)")
        self.minpoly = tuple(minpoly)
        self.k = len(minpoly) - 1
        self.name = name
        lo, hi = Fraction(enclosure[0]), Fraction(enclosure[1])
        slo, shi = self._sign(lo), self._sign(hi)
        if slo == 0:
            lo = hi = lo
        elif shi == 0:
            lo = hi
        elif slo == shi:
            raise ValueError("enclosure does not isolate a root")
        self._lo, self._hi = lo, hi
        self._slo = self._sign(lo)
        # theta^m in the power basis, for m < 2k - 1
        red = []
        for m in range(2 * self.k - 1):
            if m < self.k:
                v = [0] * self.k
                v[m] = 1
            else:
                prev = red[m - 1]
                top = prev[-1]
                v = [0] + list(prev[:-1])
                for i in range(self.k):
                    v[i] -= top * self.minpoly[i]
            red.append(tuple(v))
        self.reduction = tuple(red)
        self.refine(DEFAULT_WIDTH)

    def _sign(self, x: Fraction) -> int:
        acc = Fraction(0)
        for c in reversed(self.minpoly):
            acc = acc * x + c
        return (acc > 0) - (acc < 0)

    def refine(self, width) -> Interval:
        width = Fraction(width)
        while self._hi - self._lo > width:
            m = _dyadic_mid(self._lo, self._hi)
            s = self._sign(m)
            if s == 0:
                self._lo = self._hi = m
            elif s == self._slo:
                self._lo = m
            else:
                self._hi = m
        return Interval(self._lo, self._hi)

    def theta_interval(self, width=None) -> Interval:
        if width is not None:
            return self.refine(width)
        return Interval(self._lo, self._hi)

    def mult_table_bound(self) -> int:
        """T with |coeffs of xy| <= T * max|x| * max|y| (per scale)."""
        k = self.k
        best = 0
        for i in range(k):
            tot = 0
            for a in range(k):
                for b in range(k):
                    tot += abs(self.reduction[a + b][i])
            best = max(best, tot)
        return best

    def conjugate_bound(self) -> int:
        """Cauchy bound on the modulus of every root of the minimal polynomial."""
        return 1 + max(abs(c) for c in self.minpoly[:-1])

    def element(self, coeffs, scale: int = 0) -> "AlgebraicElement":
        return AlgebraicElement(coeffs, scale, self)

    def zero(self):
        return AlgebraicElement((0,) * self.k, 0, self)

    def one(self):
        return self.coerce(1)

    def theta(self):
        v = [0] * self.k
        v[1] = 1
        return AlgebraicElement(v, 0, self)

    def coerce(self, x):
        if isinstance(x, AlgebraicElement):
            return x
        d = x if isinstance(x, DyadicRational) else DyadicRational.from_fraction(Fraction(x))
        v = [0] * self.k
        v[0] = d.numerator
        return AlgebraicElement(v, d.scale, self)

    def key(self):
        return ("algebraic", self.minpoly)

    def __eq__(self, other):
        return isinstance(other, AlgebraicField) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        return f"AlgebraicField(minpoly={self.minpoly})"


@total_ordering
class AlgebraicElement:
    __slots__ = ("coeffs", "scale", "field")

    def __init__(self, coeffs, scale: int, field: AlgebraicField):
        coeffs = [int(c) for c in coeffs]
        if len(coeffs) != field.k:
            raise ValueError("coefficient vector has wrong length")
        if scale < 0:
            coeffs = [c << (-scale) for c in coeffs]
            scale = 0
        if not any(coeffs):
            scale = 0
        else:
            while scale > 0 and all(c % 2 == 0 for c in coeffs):
                coeffs = [c // 2 for c in coeffs]
                scale -= 1
        self.coeffs = tuple(coeffs)
        self.scale = scale
        self.field = field

    def _coerce(self, other):
        if isinstance(other, AlgebraicElement):
            if other.field is not self.field and other.field != self.field:
                raise RingMismatch("different algebraic fields")
            return other
        if isinstance(other, (int, Fraction, DyadicRational)):
            return self.field.coerce(other)
        return None

    def __add__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        s = max(self.scale, other.scale)
        a = [c << (s - self.scale) for c in self.coeffs]
        b = [c << (s - other.scale) for c in other.coeffs]
        return AlgebraicElement([x + y for x, y in zip(a, b)], s, self.field)

    __radd__ = __add__

    def __neg__(self):
        return AlgebraicElement([-c for c in self.coeffs], self.scale, self.field)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return other - self

    def __mul__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        k = self.field.k
        red = self.field.reduction
        out = [0] * k
        for i, a in enumerate(self.coeffs):
            if a == 0:
                continue
            for j, b in enumerate(other.coeffs):
                if b == 0:
                    continue
                ab = a * b
                row = red[i + j]
                for t in range(k):
                    if row[t]:
                        out[t] += ab * row[t]
        return AlgebraicElement(out, self.scale + other.scale, self.field)

    __rmul__ = __mul__

    def __pow__(self, e: int):
        out = self.field.one()
        for _ in range(e):
            out = out * self
        return out

    def is_zero(self) -> bool:
        return not any(self.coeffs)

    def interval(self, width=None) -> Interval:
        th = self.field.theta_interval(width)
        acc = Interval(0)
        for c in reversed(self.coeffs):
            acc = acc * th + c
        return acc * Fraction(1, 2 ** self.scale)

    def sign(self, max_width=Fraction(1, 2 ** 4096)) -> int:
        if self.is_zero():
            return 0
        width = DEFAULT_WIDTH
        while True:
            iv = self.interval(width)
            if iv.lo > 0:
                return 1
            if iv.hi < 0:
                return -1
            width = width * width
            if width < max_width:
                raise Indeterminate("sign undecided at maximal refinement")

    def __abs__(self):
        return -self if self.sign() < 0 else self

    def __eq__(self, other):
        if isinstance(other, AlgebraicElement):
            return self.field == other.field and self.coeffs == other.coeffs and self.scale == other.scale
        if isinstance(other, (int, Fraction, DyadicRational)):
            try:
                return self == self.field.coerce(other)
            except ValueError:
                return False
        return NotImplemented

    def __lt__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return (self - other).sign() < 0

    def __hash__(self):
        return hash((self.coeffs, self.scale))

    def max_coeff(self) -> int:
        return max(abs(c) for c in self.coeffs)

    def __repr__(self):
        return f"AlgebraicElement({self.coeffs}, scale={self.scale})"

    def serialize(self) -> str:
        return " ".join(str(c) for c in self.coeffs) + f" {self.scale}"
