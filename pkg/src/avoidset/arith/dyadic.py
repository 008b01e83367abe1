"""N-adic rationals a / N^n in canonical form."""
from __future__ import annotations

import math
from fractions import Fraction
from functools import total_ordering

from ..errors import RingMismatch


@total_ordering
class DyadicRational:
    """Value ``numerator / base**scale`` with minimal scale.

    The default base is 2; other bases are allowed but both operands of a
    binary operation must agree on it.
    """

    __slots__ = ("numerator", "scale", "base")

    def __init__(self, numerator: int, scale: int = 0, base: int = 2):
        if scale < 0:
            numerator *= base ** (-scale)
            scale = 0
        if numerator == 0:
            scale = 0
        else:
            while scale > 0 and numerator % base == 0:
                numerator //= base
                scale -= 1
        self.numerator = numerator
        self.scale = scale
        self.base = base

    @classmethod
    def from_fraction(cls, x, base: int = 2) -> "DyadicRational":
        x = Fraction(x)
        n = 0
        y = x
        while y.denominator != 1:
            if math.gcd(y.denominator, base) == 1:
                raise ValueError(f"{x} is not a {base}-adic rational")
            y *= base
            n += 1
        return cls(y.numerator, n, base)

    def _check(self, other):
        if isinstance(other, int):
            return DyadicRational(other, 0, self.base)
        if not isinstance(other, DyadicRational):
            return None
        if other.base != self.base:
            raise RingMismatch("dyadic bases differ")
        return other

    def _common(self, other):
        s = max(self.scale, other.scale)
        a = self.numerator * self.base ** (s - self.scale)
        b = other.numerator * other.base ** (s - other.scale)
        return a, b, s

    def __add__(self, other):
        other = self._check(other)
        if other is None:
            return NotImplemented
        a, b, s = self._common(other)
        return DyadicRational(a + b, s, self.base)

    __radd__ = __add__

    def __neg__(self):
        return DyadicRational(-self.numerator, self.scale, self.base)

    def __sub__(self, other):
        other = self._check(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        other = self._check(other)
        if other is None:
            return NotImplemented
        return other - self

    def __mul__(self, other):
        other = self._check(other)
        if other is None:
            return NotImplemented
        return DyadicRational(self.numerator * other.numerator,
                              self.scale + other.scale, self.base)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        return DyadicRational(self.numerator ** k, self.scale * k, self.base)

    def __abs__(self):
        return DyadicRational(abs(self.numerator), self.scale, self.base)

    def to_fraction(self) -> Fraction:
        return Fraction(self.numerator, self.base ** self.scale)

    def __eq__(self, other):
        if isinstance(other, DyadicRational):
            return (self.numerator, self.scale, self.base) == (other.numerator, other.scale, other.base)
        if isinstance(other, (int, Fraction)):
            return self.to_fraction() == other
        return NotImplemented

    def __lt__(self, other):
        if isinstance(other, DyadicRational):
            other = other.to_fraction()
        return self.to_fraction() < other

    def __hash__(self):
        return hash(self.to_fraction())

    def __repr__(self):
        return f"DyadicRational({self.numerator}, {self.scale}, base={self.base})"

    def __str__(self):
        if self.scale == 0:
            return str(self.numerator)
        return f"{self.numerator}/{self.base}^{self.scale}"

    def serialize(self) -> str:
        return f"{self.numerator} {self.scale}"
