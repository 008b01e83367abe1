"""Landmark systems: level functions with separation and ubiquity."""
from __future__ import annotations

import math
from fractions import Fraction
from functools import cmp_to_key
from itertools import product

from ..errors import NotInDomain, BudgetExceeded, Indeterminate
from ..arith.dyadic import DyadicRational
from ..arith.algebraic import AlgebraicField, AlgebraicElement
from ..arith.padic import PadicContext, PadicInteger
from ..arith.fq import FqContext, FqSeries
from ..arith.unramified import UnramifiedExtension, UnramifiedElement
from ..arith.interval import Interval
from .._pykernels import int_level

INF = math.inf
DEFAULT_BUDGET = 2_000_000


class LandmarkSystem:
    """Common interface. Subclasses set kind, r, gamma, sigma and the error constants.

    ``e_add`` / ``e_mul`` are the constant error terms b of the affine bounds
    l(x+y) <= max(l(x), l(y)) + b and l(xy) <= l(x) + l(y) + b.
    """

    kind = "abstract"
    ultrametric = False
    e_add = 0
    e_mul = 0

    def __init__(self, ctx, r: Fraction, gamma, sigma):
        self.ctx = ctx
        self.r = Fraction(r)
        self.gamma = Fraction(gamma)
        self.sigma = Fraction(sigma)
        if not self.gamma >= self.sigma > 0:
            raise ValueError("need gamma >= sigma > 0")
        if self.r.numerator != 1:
            raise ValueError("1/r must be an integer")

    @property
    def rinv(self) -> int:
        return self.r.denominator

    # overridden below
    def ell(self, w: int, x):
        raise NotImplementedError

    def phi1(self, w1: int, w2: int) -> int:
        return max(w1, w2)

    def phi2(self, w1: int, w2: int) -> int:
        return max(w1, w2)

    def C1(self, eps=0, w: int = 1) -> Fraction:
        return Fraction(1)

    def C2(self, eps=0, w: int = 1) -> Fraction:
        return Fraction(1)

    def rescaled(self, beta: int) -> "LandmarkSystem":
        """Same evaluator under parameters (r^beta, gamma/beta, sigma/beta)."""
        import copy

        out = copy.copy(self)
        out.r = self.r ** beta
        out.gamma = self.gamma / beta
        out.sigma = self.sigma / beta
        out.beta = getattr(self, "beta", 1) * beta
        return out

    def descriptor(self) -> dict:
        return {"kind": self.kind, "r": str(self.r), "gamma": str(self.gamma),
                "sigma": str(self.sigma)}


# ---------------------------------------------------------------- dyadic

def _as_fraction(x) -> Fraction:
    if isinstance(x, DyadicRational):
        return x.to_fraction()
    if isinstance(x, float):
        raise TypeError("floats are not exact")
    return Fraction(x)


class DyadicSystem(LandmarkSystem):
    """l(x) = minimal n with x = a / N^n on Omega = [0, 1]."""

    kind = "dyadic"

    def __init__(self, base: int = 2, omega=(Fraction(0), Fraction(1))):
        super().__init__(None, Fraction(1, base), 1, 1)
        self.base = base
        self.omega = (Fraction(omega[0]), Fraction(omega[1]))

    def ell(self, w, x):
        x = _as_fraction(x)
        if not self.omega[0] <= x <= self.omega[1]:
            raise NotInDomain(f"{x} outside {self.omega}")
        return self.ell_unchecked(x)

    def ell_unchecked(self, x):
        x = _as_fraction(x)
        n, y = 0, x
        while y.denominator != 1:
            if math.gcd(y.denominator, self.base) == 1:
                return INF
            y *= self.base
            n += 1
        return n

    def enumerate(self, w, lo, hi, k, closed=False):
        """Landmarks of level <= k in [lo, hi) (or [lo, hi] when closed)."""
        lo, hi = Fraction(lo), Fraction(hi)
        step = Fraction(1, self.base ** k)
        a0 = math.ceil(lo / step)
        out = []
        a = a0
        while a * step < hi or (closed and a * step == hi):
            out.append(a * step)
            a += 1
        return out

    def nearest(self, w, x, k):
        x = _as_fraction(x)
        step = Fraction(1, self.base ** k)
        a = math.floor(x / step)
        cands = [c for c in (a * step, (a + 1) * step) if self.omega[0] <= c <= self.omega[1]]
        return min(cands, key=lambda y: (abs(x - y), y))

    def all_landmarks(self, w, k):
        return self.enumerate(w, self.omega[0], self.omega[1], k, closed=True)

    def exact_covering_radius(self, k) -> Fraction:
        return Fraction(1, 2 * self.base ** k)

    def descriptor(self):
        d = super().descriptor()
        d["base"] = str(self.base)
        return d


# ---------------------------------------------------------------- algebraic

class AlgebraicSystem(LandmarkSystem):
    """l_w(x) = minimal n with x = 2^-n (a_0 + ... + a_{k-1} theta^{k-1}), |a_i| <= w 2^n."""

    kind = "algebraic"

    def __init__(self, field: AlgebraicField, c2=None, budget: int = DEFAULT_BUDGET):
        k = field.k
        super().__init__(field, Fraction(1, 2), k, k)
        self.field = field
        self.k = k
        self.omega = (Fraction(0), Fraction(1))
        self.budget = budget
        self._c2 = None if c2 is None else Fraction(c2)

    def ell(self, w, x):
        if isinstance(x, (int, Fraction, DyadicRational)):
            try:
                x = self.field.coerce(x)
            except ValueError:
                return INF
        if not isinstance(x, AlgebraicElement):
            return INF
        if x.max_coeff() <= w * 2 ** x.scale:
            return x.scale
        return INF

    def phi1(self, w1, w2):
        return w1 + w2

    def phi2(self, w1, w2):
        return self.field.mult_table_bound() * w1 * w2

    def C1(self, eps=0, w=1):
        """Liouville-type constant from the norm: |x| >= r^{k n} / (w M)^(k-1)."""
        B = self.field.conjugate_bound()
        M = sum(B ** i for i in range(self.k))
        return Fraction(w * M) ** (self.k - 1)

    def C2(self, eps=0, w=1):
        if self._c2 is None:
            return None
        return self._c2

    def _value(self, coeffs, n):
        return AlgebraicElement(coeffs, n, self.field)

    def enumerate(self, w, lo, hi, k, closed=False):
        lo, hi = Fraction(lo), Fraction(hi)
        bound = w * 2 ** k
        count = (2 * bound + 1) ** (self.k - 1)
        if count > self.budget:
            raise BudgetExceeded(f"{count} coefficient vectors exceed the budget")
        th = self.field.theta_interval()
        scale = Fraction(2 ** k)
        out = []
        for tail in product(range(-bound, bound + 1), repeat=self.k - 1):
            S = Interval(0)
            for i, a in enumerate(tail, start=1):
                S = S + th ** i * a
            a_lo = max(-bound, math.floor(lo * scale - S.hi) - 1)
            a_hi = min(bound, math.ceil(hi * scale - S.lo) + 1)
            for a0 in range(a_lo, a_hi + 1):
                y = self._value((a0,) + tail, k)
                if _cmp_rational(y, lo) < 0:
                    continue
                s = _cmp_rational(y, hi)
                if s > 0 or (s == 0 and not closed):
                    continue
                out.append(y)
        out = list(set(out))
        out.sort(key=cmp_to_key(lambda a, b: (a - b).sign()))
        return out

    def all_landmarks(self, w, k):
        return self.enumerate(w, self.omega[0], self.omega[1], k, closed=True)

    def min_abs(self, w, j, span: int = 1) -> Interval:
        """Smallest |y| over nonzero y = 2^-j (a_0 + ...), |a_i| <= span * w 2^j (quadratic only)."""
        if self.k != 2:
            return self._min_abs_scan(w, j, span)
        bound = span * w * 2 ** j
        th = self.field.theta_interval()
        best = None
        for a1 in range(-bound, bound + 1):
            c = a1 * th
            for a0 in {math.floor(-c.lo), math.ceil(-c.hi), math.floor(-c.hi), math.ceil(-c.lo),
                       -bound, bound}:
                if abs(a0) > bound or (a0 == 0 and a1 == 0):
                    continue
                y = self._value((a0, a1), j)
                iv = _abs_interval(y)
                if best is None or iv.hi < best.hi:
                    best = iv
        return best

    def _min_abs_scan(self, w, j, span):
        bound = span * w * 2 ** j
        best = None
        for vec in product(range(-bound, bound + 1), repeat=self.k):
            if not any(vec):
                continue
            iv = _abs_interval(self._value(vec, j))
            if best is None or iv.hi < best.hi:
                best = iv
        return best

    def nearest(self, w, x, k):
        x = Fraction(x)
        radius = Fraction(1, 2 ** k)
        while True:
            cands = self.enumerate(w, x - radius, x + radius, k, closed=True)
            if cands:
                break
            radius *= 2
            if radius > 4:
                raise BudgetExceeded("no landmark found near x")
        best = cands[0]
        for y in cands[1:]:
            c = _cmp_distance(x, y, best)
            if c < 0:
                best = y
        return best

    def descriptor(self):
        d = super().descriptor()
        d["minpoly"] = " ".join(str(c) for c in self.field.minpoly)
        return d


def _dyadic(x: Fraction) -> bool:
    d = x.denominator
    return d & (d - 1) == 0


def _cmp_rational(y: AlgebraicElement, x: Fraction) -> int:
    """Sign of y - x for a rational x that need not be dyadic."""
    if _dyadic(x):
        return (y - x).sign()
    width = Fraction(1, 2 ** 64)
    while True:
        iv = y.interval(width) - x
        if iv.lo > 0:
            return 1
        if iv.hi < 0:
            return -1
        width *= width
        if width < Fraction(1, 2 ** 8192):
            raise Indeterminate("comparison undecided")


def _abs_interval(y: AlgebraicElement) -> Interval:
    s = y.sign()
    iv = y.interval()
    return iv if s > 0 else -iv


def _cmp_distance(x: Fraction, a: AlgebraicElement, b: AlgebraicElement) -> int:
    """Compare |x - a| with |x - b|, ties broken by ascending value."""
    if a == b:
        return 0
    # equal distances happen only when a + b == 2x
    if _dyadic(x) and (a + b) == a.field.coerce(2 * x):
        return (a - b).sign()
    width = Fraction(1, 2 ** 64)
    while True:
        da = _absiv(a.interval(width) - x)
        db = _absiv(b.interval(width) - x)
        if da.hi < db.lo:
            return -1
        if db.hi < da.lo:
            return 1
        width *= width
        if width < Fraction(1, 2 ** 8192):
            raise Indeterminate("distance comparison undecided")


def _absiv(iv: Interval) -> Interval:
    if iv.lo >= 0:
        return iv
    if iv.hi <= 0:
        return -iv
    return Interval(0, max(-iv.lo, iv.hi))


# ---------------------------------------------------------------- ultrametric

class UltraSystem(LandmarkSystem):
    """Shared machinery for landmark systems on rings of integers of local fields."""

    ultrametric = True

    def __init__(self, ctx):
        super().__init__(ctx, Fraction(1, ctx.q), 1, 1)
        self.q = ctx.q
        self.precision = ctx.precision

    def abs(self, x) -> Fraction:
        return self.ctx.abs_value(x)

    def dist(self, x, y) -> Fraction:
        return self.ctx.abs_value(x - y)

    def exact_covering_radius(self, k) -> Fraction:
        # measured in the field's own metric, so unchanged by rescaling
        return Fraction(1, self.q) ** (k + 1)

    def all_landmarks(self, w, k):
        return self.enumerate(w, 0, 0, k)

    def nearest(self, w, x, k, budget: int = DEFAULT_BUDGET):
        cands = self.all_landmarks(w, k)
        if len(cands) > budget:
            raise BudgetExceeded("landmark set exceeds budget")
        P = self.precision
        return min(cands, key=lambda y: (self.dist(x, y), self.ctx.code(y, P)))


class FunctionFieldSystem(UltraSystem):
    """F_q[[t]]: the level is the degree of the (polynomial) element."""

    kind = "function-field"

    def ell(self, w, x):
        if not isinstance(x, FqSeries):
            raise NotInDomain("expected an F_q series")
        return x.degree()

    def enumerate(self, w, code, s, k):
        """Landmarks of degree <= k in the ball with digit prefix ``code`` of length s."""
        ctx = self.ctx
        q = self.q
        if k >= self.precision:
            raise BudgetExceeded("level reaches the truncation precision")
        base = ctx.from_code(code, s).coeffs
        if s > k + 1:
            if any(base[k + 1:s]):
                return []
            return [ctx.from_code(code, s)]
        out = []
        for tail in range(q ** (k + 1 - s)):
            out.append(ctx.from_code(code + tail * q ** s, k + 1))
        return out


class PadicSystem(UltraSystem):
    """Z_p: the level of an integer x is the number of base-p digits of |x| minus one."""

    kind = "p-adic"
    e_add = 1
    e_mul = 1

    def ell(self, w, x):
        if not isinstance(x, PadicInteger):
            raise NotInDomain("expected a p-adic integer")
        return int_level(x.signed(), self.ctx.p)

    def integer_landmarks(self, k):
        m = self.ctx.p ** (k + 1)
        return range(-(m - 1), m)

    def enumerate(self, w, code, s, k):
        p = self.ctx.p
        m = p ** (k + 1)
        step = p ** s
        out = set()
        x = code % step
        # integers congruent to code mod p^s with |x| < p^(k+1)
        lo = x - ((x + m - 1) // step) * step
        y = lo
        while y < m:
            if -m < y:
                out.add(PadicInteger(y, self.ctx))
            y += step
        return sorted(out, key=lambda e: e.value)


class UnramifiedSystem(UltraSystem):
    """Unramified extension: the level is the max of the component levels."""

    kind = "unramified"
    e_add = 1

    def __init__(self, ext: UnramifiedExtension):
        super().__init__(ext)
        self.ext = ext
        # each product component is an integer combination of products of
        # integer landmarks; the carry count is bounded by the table size
        T = 0
        f = ext.f
        for i in range(f):
            tot = sum(abs(ext.reduction[a + b][i]) for a in range(f) for b in range(f))
            T = max(T, tot)
        self.e_mul = 1 + max(0, math.ceil(math.log(max(T, 1), ext.p)))

    def ell(self, w, x):
        if not isinstance(x, UnramifiedElement):
            raise NotInDomain("expected an unramified element")
        return max(int_level(c, self.ext.p) for c in x.signed_components())

    def enumerate(self, w, code, s, k):
        ext = self.ext
        p = ext.p
        prefix = ext.from_code(code, s).comps
        m = p ** (k + 1)
        step = p ** s
        per = []
        for c in prefix:
            x = c % step
            vals = []
            y = x - ((x + m - 1) // step) * step
            while y < m:
                if -m < y:
                    vals.append(y)
                y += step
            per.append(vals)
        out = {UnramifiedElement(list(t), ext) for t in product(*per)}
        P = ext.precision
        return sorted(out, key=lambda e: ext.code(e, P))


def system_for(ctx, **kw) -> LandmarkSystem:
    if isinstance(ctx, FqContext):
        return FunctionFieldSystem(ctx)
    if isinstance(ctx, PadicContext):
        return PadicSystem(ctx)
    if isinstance(ctx, UnramifiedExtension):
        return UnramifiedSystem(ctx)
    if isinstance(ctx, AlgebraicField):
        return AlgebraicSystem(ctx, **kw)
    return DyadicSystem(**kw)


# ---------------------------------------------------------------- spec-level API

def ell_value(sys: LandmarkSystem, w: int, x):
    return sys.ell(w, x)


def enumerate_landmarks(sys: LandmarkSystem, w: int, ball, k: int):
    """All landmarks of level <= k in a cube (half-open in R) in canonical order."""
    if sys.ultrametric:
        per = [sys.enumerate(w, c, ball.scale, k) for c in ball.coords]
    else:
        per = [sys.enumerate(w, iv.lo, iv.hi, k) for iv in ball.intervals()]
    if ball.grid.n == 1:
        return per[0]
    return [tuple(t) for t in product(*per)]


def nearest_landmark(sys: LandmarkSystem, w: int, x, k: int):
    return sys.nearest(w, x, k)
