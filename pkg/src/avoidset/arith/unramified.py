"""Unramified extensions of Z_p: components x^(0) + t x^(1) + ... + t^(f-1) x^(f-1)."""
from __future__ import annotations

from fractions import Fraction

from ..errors import RingMismatch, PrecisionMismatch
from .fq import is_irreducible_mod_p


class UnramifiedExtension:
    kind = "unramified"
    archimedean = False

    def __init__(self, p: int, poly, precision: int):
        """``poly`` is the monic lift, coefficients low to high including the leading 1."""
        poly = [int(c) for c in poly]
        f = len(poly) - 1
        if f < 1 or poly[-1] != 1:
            raise ValueError("polynomial must be monic of degree >= 1")
        if any(not 0 <= c < p for c in poly[:-1]):
            raise ValueError("coefficients must lie in {0, ..., p-1}")
        if not is_irreducible_mod_p(poly, p):
            raise ValueError("polynomial is not irreducible mod p")
        self.p = p
        self.f = f
        self.q = p ** f
        self.poly = tuple(poly)
        self.precision = precision
        self.modulus = p ** precision
        # t^j for 0 <= j <= 2f-2 as integer vectors in the basis 1, t, ..., t^(f-1)
        red = []
        for j in range(2 * f - 1):
            if j < f:
                v = [0] * f
                v[j] = 1
            else:
                prev = red[j - 1]
                top = prev[-1]
                v = [0] + list(prev[:-1])
                for i in range(f):
                    v[i] -= top * poly[i]
            red.append(tuple(v))
        self.reduction = tuple(red)

    def __eq__(self, other):
        return isinstance(other, UnramifiedExtension) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def key(self):
        return ("unramified", self.p, self.poly, self.precision)

    def __repr__(self):
        return f"UnramifiedExtension(p={self.p}, f={self.f}, poly={self.poly}, precision={self.precision})"

    def __call__(self, comps) -> "UnramifiedElement":
        return UnramifiedElement(comps, self)

    def zero(self):
        return UnramifiedElement([0] * self.f, self)

    def one(self):
        return self.coerce(1)

    def coerce(self, x):
        if isinstance(x, UnramifiedElement):
            return x
        if isinstance(x, Fraction):
            if x.denominator % self.p == 0:
                raise ValueError(f"{x} is not integral")
            x = x.numerator * pow(x.denominator, -1, self.modulus)
        return UnramifiedElement([int(x)] + [0] * (self.f - 1), self)

    def valuation(self, x: "UnramifiedElement") -> int:
        best = self.precision
        for c in x.comps:
            if c:
                n = 0
                while c % self.p == 0:
                    c //= self.p
                    n += 1
                best = min(best, n)
        return best

    def abs_value(self, x) -> Fraction:
        v = self.valuation(x)
        return Fraction(0) if v >= self.precision else Fraction(1, self.q ** v)

    def code(self, x: "UnramifiedElement", s: int) -> int:
        """Digit prefix of length s; digit k packs the k-th p-adic digit of each component."""
        p, q = self.p, self.q
        comps = list(x.comps)
        out = 0
        for k in range(s):
            D = 0
            for i in range(self.f):
                comps[i], d = divmod(comps[i], p)
                D += d * p ** i
            out += D * q ** k
        return out

    def from_code(self, code: int, s: int) -> "UnramifiedElement":
        p, q = self.p, self.q
        comps = [0] * self.f
        for k in range(s):
            code, D = divmod(code, q)
            for i in range(self.f):
                D, d = divmod(D, p)
                comps[i] += d * p ** k
        return UnramifiedElement(comps, self)

    def digit_monomial(self, digit: int, pos: int) -> "UnramifiedElement":
        return self.from_code(digit * self.q ** pos, pos + 1)

    def from_digits(self, digits) -> "UnramifiedElement":
        return self.from_code(sum(d * self.q ** i for i, d in enumerate(digits)), len(digits))


class UnramifiedElement:
    __slots__ = ("comps", "ext")

    def __init__(self, comps, ext: UnramifiedExtension):
        comps = [int(c) % ext.modulus for c in comps]
        if len(comps) != ext.f:
            raise ValueError("wrong number of components")
        self.comps = tuple(comps)
        self.ext = ext

    def _coerce(self, other):
        if isinstance(other, UnramifiedElement):
            if other.ext.precision != self.ext.precision:
                raise PrecisionMismatch("different precisions")
            if other.ext != self.ext:
                raise RingMismatch("different extensions")
            return other
        if isinstance(other, int):
            return self.ext.coerce(other)
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return UnramifiedElement([a + b for a, b in zip(self.comps, o.comps)], self.ext)

    __radd__ = __add__

    def __neg__(self):
        return UnramifiedElement([-a for a in self.comps], self.ext)

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o - self

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        f = self.ext.f
        red = self.ext.reduction
        out = [0] * f
        for i, a in enumerate(self.comps):
            if a:
                for j, b in enumerate(o.comps):
                    if b:
                        ab = a * b
                        row = red[i + j]
                        for t in range(f):
                            if row[t]:
                                out[t] += ab * row[t]
        return UnramifiedElement(out, self.ext)

    __rmul__ = __mul__

    def __pow__(self, e: int):
        out = self.ext.one()
        for _ in range(e):
            out = out * self
        return out

    def signed_components(self):
        m = self.ext.modulus
        return tuple(c if c <= m - c else c - m for c in self.comps)

    def is_zero(self) -> bool:
        return not any(self.comps)

    def __eq__(self, other):
        if isinstance(other, UnramifiedElement):
            return self.comps == other.comps and self.ext == other.ext
        if isinstance(other, int):
            return self == self.ext.coerce(other)
        return NotImplemented

    def __hash__(self):
        return hash(("unram", self.comps))

    def __lt__(self, other):
        P = self.ext.precision
        return self.ext.code(self, P) < other.ext.code(other, P)

    def __repr__(self):
        return f"UnramifiedElement({self.signed_components()})"

    def serialize(self) -> str:
        return " ".join(str(c) for c in self.comps)
