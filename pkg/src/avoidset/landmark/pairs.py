"""Landmark pairs: exact pairs from polynomials and weak approximate pairs."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from ..errors import AvoidsetError
from ..arith.algebraic import AlgebraicElement
from ..arith.interval import Interval
from .systems import INF, LandmarkSystem, DyadicSystem
from .contfrac import quadratic_root_cf, convergents


@dataclass(frozen=True)
class ApproximationWitness:
    j: int
    c: int
    y: tuple           # integer numerators y_alpha with c * a_alpha ~ y_alpha
    coeff_error: Fraction   # certified max_alpha |c a_alpha - y_alpha|
    error: Fraction         # certified bound on |y(x) - p(x)| for inputs in [-1, 1]


@dataclass
class LandmarkPair:
    """A (weak approximate) landmark pair adapted to ``target``.

    ``J`` is None for exact pairs valid at every level; weak pairs carry an
    explicit map level -> witness.
    """

    system: LandmarkSystem
    degree: Fraction
    const: int = 0
    w: int = 1
    target: object = None
    J: dict = None
    budget: int = None
    eps: Fraction = Fraction(0)
    kind: str = "exact"
    trace: list = field(default_factory=list)

    @property
    def r(self):
        return self.system.r

    @property
    def gamma(self):
        return self.system.gamma

    @property
    def sigma(self):
        return self.system.sigma

    def in_J(self, j: int) -> bool:
        return self.J is None or j in self.J

    def levels(self):
        return None if self.J is None else sorted(self.J)

    def witness_error(self, j: int) -> Fraction:
        if self.J is None:
            return Fraction(0)
        return self.J[j].error

    def ell1(self, x):
        return self.system.ell(1, x)

    def ell2(self, y):
        if self.kind == "exact":
            return self.system.ell(self.w, y)
        return self._ell2_weak(y)

    def _ell2_weak(self, y):
        y = Fraction(y)
        best = INF
        d = self.target.degree
        for j, wit in self.J.items():
            z = y * wit.c * 2 ** (d * j)
            if z.denominator == 1:
                best = min(best, math.ceil(self.degree * j))
        return best

    def bound(self, j: int) -> Fraction:
        """The level bound d*j + const for outputs at input level j."""
        return self.degree * j + self.const


class PairError(AvoidsetError):
    pass


def _coeff_level(sys, w, c):
    if isinstance(sys, DyadicSystem):
        return sys.ell_unchecked(c)
    return sys.ell(w, c)


def _is_unit_sign(c) -> bool:
    if isinstance(c, (int, Fraction)):
        return abs(c) == 1
    try:
        return c == 1 or c == -1 or (-c) == 1
    except Exception:
        return False


def derive_polynomial_pair(sys: LandmarkSystem, p, w_coeff: int = 1) -> LandmarkPair:
    """Track w(p) and the additive constant c_p along the term-by-term induction.

    Each term a x^alpha is a chain of |alpha| - 1 multiplications of inputs
    (one e_mul each) times the coefficient (free for +-1). Terms are then
    added one at a time, highest degree first and, among equal degrees,
    largest tracked constant first; every addition costs e_add.
    """
    log = []
    terms = []
    for e in p.order:
        a = p.terms[e]
        la = _coeff_level(sys, w_coeff, a)
        if la == INF:
            raise PairError(f"coefficient {a!r} is not a landmark at w={w_coeff}")
        deg = sum(e)
        if deg == 0:
            terms.append((0, int(la), w_coeff, e))
            log.append(("constant", e, 0, int(la), w_coeff))
            continue
        c, w = 0, 1
        for _ in range(deg - 1):
            c += sys.e_mul
            w = sys.phi2(1, w)
        if not _is_unit_sign(a):
            c = int(la) + c + sys.e_mul
            w = sys.phi2(w_coeff, w)
        terms.append((deg, c, w, e))
        log.append(("term", e, deg, c, w))
    if not terms:
        return LandmarkPair(sys, Fraction(0), 0, 1, p, trace=log)
    terms.sort(key=lambda t: (t[0], t[1], t[3]))
    # fold from the smallest up, so that the last peeled term is the first added
    deg, c, w, _ = terms[0]
    for tdeg, tc, tw, e in terms[1:]:
        deg = max(deg, tdeg)
        c = max(c, tc) + sys.e_add
        w = sys.phi1(tw, w)
        log.append(("add", e, deg, c, w))
    return LandmarkPair(sys, Fraction(p.degree), c, w, p, trace=log)


# ---------------------------------------------------------------- weak pairs

def iroot_ceil(n: int, b: int) -> int:
    """Smallest integer c >= 0 with c**b >= n."""
    if n <= 1:
        return max(n, 0)
    c = 1 << -(-n.bit_length() // b)  # an upper bound
    while True:
        nc = ((b - 1) * c + n // c ** (b - 1)) // b
        if nc >= c:
            break
        c = nc
    while c ** b < n:
        c += 1
    while c > 0 and (c - 1) ** b >= n:
        c -= 1
    return c


def pow2_ceil(e: Fraction) -> int:
    """Smallest integer c with c >= 2^e (e >= 0 rational)."""
    e = Fraction(e)
    return iroot_ceil(2 ** e.numerator, e.denominator)


def _split_coeff(a):
    """(u, v) with a = u + v theta for rationals u, v."""
    if isinstance(a, AlgebraicElement):
        if a.field.k != 2:
            raise PairError("continued-fraction witnesses need a quadratic span")
        s = Fraction(1, 2 ** a.scale)
        return a.coeffs[0] * s, a.coeffs[1] * s
    return Fraction(a), Fraction(0)


def build_rational_approx_pair(p, tau, alpha, budget: int, eps=None, cf_terms: int = 200) -> LandmarkPair:
    """Weak approximate pair of degree d + alpha for a real-coefficient polynomial.

    Coefficients are rationals or elements of a quadratic field Q(t); the
    witnesses c_j = D q_n come from convergents r_n / q_n of t.
    """
    tau, alpha = Fraction(tau), Fraction(alpha)
    d = p.degree
    if not alpha > d / tau:
        raise PairError("need alpha > d / tau")
    if eps is None:
        eps = (alpha * tau - d) / 2
    order = p.order
    splits = [_split_coeff(p.terms[e]) for e in order]
    D = 1
    for u, v in splits:
        D = D * u.denominator // math.gcd(D, u.denominator)
        D = D * v.denominator // math.gcd(D, v.denominator)
    field = None
    for e in order:
        if isinstance(p.terms[e], AlgebraicElement):
            field = p.terms[e].field
    irrational = field is not None and any(v for _, v in splits)
    conv = []
    th = None
    if irrational:
        conv = convergents(quadratic_root_cf(field, cf_terms))
        th = field.theta_interval()
    nterms = len(order)
    sysd = DyadicSystem(omega=(-1, 1))
    J = {}
    for j in range(1, budget + 1):
        lo, hi = pow2_ceil(alpha * (j - 1)), pow2_ceil(alpha * j)  # c in [lo, hi)
        cands = []
        if not irrational:
            c = -(-lo // D) * D
            if c < hi:
                cands.append((c, 0, 0))
        else:
            for r_n, q_n in conv:
                c = D * q_n
                if lo <= c < hi:
                    cands.append((c, r_n, q_n))
        best = None
        for c, r_n, q_n in cands:
            ys, err = [], Fraction(0)
            for u, v in splits:
                y = D * (u * q_n + v * r_n) if irrational else c * u
                y = int(y)
                if irrational:
                    th = field.theta_interval(Fraction(1, q_n * q_n * 2 ** 20))
                    gap = Interval(q_n) * th - r_n
                    e_iv = gap * (D * v)
                    e_up = e_iv.mag()
                else:
                    e_up = Fraction(0)
                ys.append(y)
                err = max(err, e_up)
            total = err * nterms / c
            if best is None or total < best.error:
                best = ApproximationWitness(j, c, tuple(ys), err, total)
        if best is None:
            continue
        if _fits(best.error, d + alpha, eps, j):
            J[j] = best
    if not J:
        raise PairError("no admissible level within budget")
    return LandmarkPair(sysd, d + alpha, 0, 1, p, J=J, budget=budget, eps=eps, kind="weak")


def _fits(err: Fraction, deg: Fraction, eps: Fraction, j: int) -> bool:
    """err <= 2^{-(deg + eps) j}, decided exactly."""
    if err == 0:
        return True
    e = (deg + eps) * j
    # err^b <= 2^{-a} with e = a/b
    a, b = e.numerator, e.denominator
    return (err ** b) * (2 ** a) <= 1
