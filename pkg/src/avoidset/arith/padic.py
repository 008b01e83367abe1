"""Truncated p-adic integers, stored as residues modulo p^precision."""
from __future__ import annotations

from fractions import Fraction

from ..errors import RingMismatch, PrecisionMismatch


class PadicContext:
    kind = "padic"
    archimedean = False

    def __init__(self, p: int, precision: int):
        if p < 2 or any(p % d == 0 for d in range(2, int(p ** 0.5) + 1)):
            raise ValueError(f"{p} is not prime")
        if precision < 1:
            raise ValueError("precision must be positive")
        self.p = p
        self.q = p
        self.precision = precision
        self.modulus = p ** precision

    def __eq__(self, other):
        return isinstance(other, PadicContext) and (self.p, self.precision) == (other.p, other.precision)

    def __hash__(self):
        return hash(("padic", self.p, self.precision))

    def __repr__(self):
        return f"PadicContext(p={self.p}, precision={self.precision})"

    def key(self):
        return ("padic", self.p, self.precision)

    def __call__(self, value: int) -> "PadicInteger":
        return PadicInteger(value, self)

    def zero(self):
        return PadicInteger(0, self)

    def one(self):
        return PadicInteger(1, self)

    def coerce(self, x):
        if isinstance(x, PadicInteger):
            return x
        if isinstance(x, Fraction):
            if x.denominator % self.p == 0:
                raise ValueError(f"{x} is not a p-adic integer")
            return PadicInteger(x.numerator * pow(x.denominator, -1, self.modulus), self)
        return PadicInteger(int(x), self)

    def valuation(self, x: "PadicInteger") -> int:
        v = x.value
        if v == 0:
            return self.precision
        n = 0
        while v % self.p == 0:
            v //= self.p
            n += 1
        return n

    def abs_value(self, x) -> Fraction:
        v = self.valuation(x)
        return Fraction(0) if v >= self.precision else Fraction(1, self.p ** v)

    def code(self, x: "PadicInteger", s: int) -> int:
        return x.value % (self.p ** s)

    def from_code(self, code: int, s: int) -> "PadicInteger":
        return PadicInteger(code, self)

    def digit_monomial(self, digit: int, pos: int) -> "PadicInteger":
        return PadicInteger(digit * self.p ** pos, self)

    def from_digits(self, digits) -> "PadicInteger":
        return PadicInteger(sum(d * self.p ** i for i, d in enumerate(digits)), self)


class PadicInteger:
    __slots__ = ("value", "ctx")

    def __init__(self, value: int, ctx: PadicContext):
        self.value = value % ctx.modulus
        self.ctx = ctx

    def _coerce(self, other):
        if isinstance(other, PadicInteger):
            if other.ctx.p != self.ctx.p:
                raise RingMismatch("different primes")
            if other.ctx.precision != self.ctx.precision:
                raise PrecisionMismatch("different precisions")
            return other
        if isinstance(other, int):
            return PadicInteger(other, self.ctx)
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return PadicInteger(self.value + o.value, self.ctx)

    __radd__ = __add__

    def __neg__(self):
        return PadicInteger(-self.value, self.ctx)

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return PadicInteger(self.value - o.value, self.ctx)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o - self

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return PadicInteger(self.value * o.value, self.ctx)

    __rmul__ = __mul__

    def __pow__(self, e: int):
        return PadicInteger(pow(self.value, e, self.ctx.modulus), self.ctx)

    @property
    def digits(self) -> tuple:
        out, v = [], self.value
        for _ in range(self.ctx.precision):
            v, d = divmod(v, self.ctx.p)
            out.append(d)
        return tuple(out)

    def signed(self) -> int:
        """Representative of least absolute value in (-p^P, p^P)."""
        m = self.ctx.modulus
        return self.value if self.value <= m - self.value else self.value - m

    def is_zero(self) -> bool:
        return self.value == 0

    def __eq__(self, other):
        if isinstance(other, PadicInteger):
            return self.value == other.value and self.ctx == other.ctx
        if isinstance(other, int):
            return self.value == other % self.ctx.modulus
        return NotImplemented

    def __hash__(self):
        return hash(("padic", self.value, self.ctx.p))

    def __lt__(self, other):
        return self.value < other.value

    def __repr__(self):
        return f"PadicInteger({self.signed()} mod {self.ctx.p}^{self.ctx.precision})"

    def serialize(self) -> str:
        return " ".join(str(d) for d in self.digits)
