"""Finite fields F_q and truncated power series F_q[[t]] / t^P."""
from __future__ import annotations

from fractions import Fraction
from functools import lru_cache

from ..errors import RingMismatch, PrecisionMismatch


def factor_prime_power(q: int):
    for p in range(2, q + 1):
        if q % p == 0:
            k, m = 0, q
            while m % p == 0:
                m //= p
                k += 1
            if m != 1:
                raise ValueError(f"{q} is not a prime power")
            return p, k
    raise ValueError(f"{q} is not a prime power")


def _polymulmod(a, b, p):
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] = (out[i + j] + x * y) % p
    return out


def _polyrem(a, m, p):
    """Remainder of a by monic m over F_p (lists low to high)."""
    a = list(a)
    dm = len(m) - 1
    for i in range(len(a) - 1, dm - 1, -1):
        c = a[i] % p
        if c:
            for j in range(dm + 1):
                a[i - dm + j] = (a[i - dm + j] - c * m[j]) % p
    return [x % p for x in a[:dm]] + [0] * max(0, dm - len(a))


def is_irreducible_mod_p(poly, p: int) -> bool:
    """Brute-force irreducibility test for a monic polynomial over F_p."""
    poly = [c % p for c in poly]
    deg = len(poly) - 1
    if deg <= 0 or poly[-1] != 1:
        return False
    for d in range(1, deg // 2 + 1):
        for code in range(p ** d):
            cand = [(code // p ** i) % p for i in range(d)] + [1]
            if not any(_polyrem(poly, cand, p)):
                return False
    return True


@lru_cache(maxsize=None)
def _gf_tables(q: int):
    p, k = factor_prime_power(q)
    if k == 1:
        add = tuple(tuple((a + b) % p for b in range(p)) for a in range(p))
        mul = tuple(tuple((a * b) % p for b in range(p)) for a in range(p))
        return p, k, None, add, mul
    modulus = None
    for code in range(p ** k):
        cand = [(code // p ** i) % p for i in range(k)] + [1]
        if is_irreducible_mod_p(cand, p):
            modulus = tuple(cand)
            break

    def dig(x):
        return [(x // p ** i) % p for i in range(k)]

    def enc(v):
        return sum((c % p) * p ** i for i, c in enumerate(v))

    add = tuple(tuple(enc([x + y for x, y in zip(dig(a), dig(b))]) for b in range(q)) for a in range(q))
    mul = tuple(tuple(enc(_polyrem(_polymulmod(dig(a), dig(b), p), modulus, p)) for b in range(q))
                for a in range(q))
    return p, k, modulus, add, mul


class GF:
    """F_q with elements encoded as integers 0..q-1 (base-p digit vectors)."""

    def __init__(self, q: int):
        self.q = q
        self.p, self.k, self.modulus, self.add, self.mul = _gf_tables(q)
        self.neg = tuple(next(b for b in range(q) if self.add[a][b] == 0) for a in range(q))
        self.inv = tuple([0] + [next(b for b in range(q) if self.mul[a][b] == 1) for a in range(1, q)])

    def from_int(self, n: int) -> int:
        return n % self.p  # integers map into the prime field


class FqContext:
    kind = "fq"
    archimedean = False

    def __init__(self, q: int, precision: int):
        if precision < 1:
            raise ValueError("precision must be positive")
        self.gf = GF(q)
        self.q = q
        self.p = self.gf.p
        self.precision = precision
        self.prime_field = self.gf.k == 1

    def __eq__(self, other):
        return isinstance(other, FqContext) and (self.q, self.precision) == (other.q, other.precision)

    def __hash__(self):
        return hash(("fq", self.q, self.precision))

    def __repr__(self):
        return f"FqContext(q={self.q}, precision={self.precision})"

    def key(self):
        return ("fq", self.q, self.precision)

    def __call__(self, coeffs) -> "FqSeries":
        return FqSeries(coeffs, self)

    def zero(self):
        return FqSeries((), self)

    def one(self):
        return FqSeries((1,), self)

    def coerce(self, x):
        if isinstance(x, FqSeries):
            return x
        if isinstance(x, Fraction):
            if x.denominator % self.p == 0:
                raise ValueError(f"{x} has no image in F_{self.q}")
            num = self.gf.from_int(x.numerator)
            return FqSeries((self.gf.mul[num][self.gf.inv[self.gf.from_int(x.denominator)]],), self)
        return FqSeries((self.gf.from_int(int(x)),), self)

    def valuation(self, x: "FqSeries") -> int:
        for i, c in enumerate(x.coeffs):
            if c:
                return i
        return self.precision

    def abs_value(self, x) -> Fraction:
        v = self.valuation(x)
        return Fraction(0) if v >= self.precision else Fraction(1, self.q ** v)

    def code(self, x: "FqSeries", s: int) -> int:
        return sum(c * self.q ** i for i, c in enumerate(x.coeffs[:s]))

    def from_code(self, code: int, s: int) -> "FqSeries":
        out = []
        for _ in range(s):
            code, d = divmod(code, self.q)
            out.append(d)
        return FqSeries(out, self)

    def digit_monomial(self, digit: int, pos: int) -> "FqSeries":
        return FqSeries([0] * pos + [digit], self)

    def from_digits(self, digits) -> "FqSeries":
        return FqSeries(digits, self)


class FqSeries:
    __slots__ = ("coeffs", "ctx")

    def __init__(self, coeffs, ctx: FqContext):
        P = ctx.precision
        c = [int(x) for x in coeffs][:P]
        for x in c:
            if not 0 <= x < ctx.q:
                raise ValueError(f"coefficient {x} not a residue mod {ctx.q}")
        c += [0] * (P - len(c))
        self.coeffs = tuple(c)
        self.ctx = ctx

    def _coerce(self, other):
        if isinstance(other, FqSeries):
            if other.ctx.q != self.ctx.q:
                raise RingMismatch("different residue fields")
            if other.ctx.precision != self.ctx.precision:
                raise PrecisionMismatch("different precisions")
            return other
        if isinstance(other, int):
            return self.ctx.coerce(other)
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        ctx = self.ctx
        if ctx.prime_field:
            p = ctx.p
            return FqSeries([(a + b) % p for a, b in zip(self.coeffs, o.coeffs)], ctx)
        add = ctx.gf.add
        return FqSeries([add[a][b] for a, b in zip(self.coeffs, o.coeffs)], ctx)

    __radd__ = __add__

    def __neg__(self):
        neg = self.ctx.gf.neg
        return FqSeries([neg[a] for a in self.coeffs], self.ctx)

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
        ctx = self.ctx
        P = ctx.precision
        a, b = self.coeffs, o.coeffs
        if ctx.prime_field:
            p = ctx.p
            out = [0] * P
            for i in range(P):
                ai = a[i]
                if ai:
                    for j in range(P - i):
                        if b[j]:
                            out[i + j] += ai * b[j]
            return FqSeries([x % p for x in out], ctx)
        add, mul = ctx.gf.add, ctx.gf.mul
        out = [0] * P
        for i in range(P):
            if a[i]:
                for j in range(P - i):
                    if b[j]:
                        out[i + j] = add[out[i + j]][mul[a[i]][b[j]]]
        return FqSeries(out, ctx)

    __rmul__ = __mul__

    def __pow__(self, e: int):
        out = self.ctx.one()
        for _ in range(e):
            out = out * self
        return out

    def is_zero(self) -> bool:
        return not any(self.coeffs)

    def degree(self) -> int:
        for i in range(len(self.coeffs) - 1, -1, -1):
            if self.coeffs[i]:
                return i
        return 0

    def __eq__(self, other):
        if isinstance(other, FqSeries):
            return self.coeffs == other.coeffs and self.ctx == other.ctx
        if isinstance(other, int):
            return self == self.ctx.coerce(other)
        return NotImplemented

    def __hash__(self):
        return hash(("fq", self.coeffs))

    def __lt__(self, other):
        return self.coeffs[::-1] < other.coeffs[::-1]

    def __repr__(self):
        terms = [f"{c}t^{i}" if i else str(c) for i, c in enumerate(self.coeffs) if c]
        return f"FqSeries({' + '.join(terms) or '0'} mod t^{self.ctx.precision})"

    def serialize(self) -> str:
        return " ".join(str(c) for c in self.coeffs)
