"""Exhaustive desk-scale audits of the landmark-system axioms."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
from sympy import integer_nthroot

from .. import kernels
from ..arith.interval import Interval
from .systems import (LandmarkSystem, DyadicSystem, AlgebraicSystem, FunctionFieldSystem,
                      PadicSystem, UltraSystem)

EXPONENT_TOL = Fraction(1, 2)
HEADER = "property\tlevel\tmeasured\tbound\tstatus"


def fmt(x) -> str:
    if x is None:
        return "-"
    if isinstance(x, str):
        return x
    if isinstance(x, Fraction):
        return str(x) if x.denominator <= 10 ** 6 else fmt_num(x)
    if isinstance(x, int):
        return str(x)
    if isinstance(x, Interval):
        return f"[{fmt_num(x.lo)},{fmt_num(x.hi)}]"
    return fmt_num(x)


def fmt_num(x) -> str:
    with mpmath.workdps(30):
        return mpmath.nstr(mpmath.mpf(x.numerator) / x.denominator if isinstance(x, Fraction) else mpmath.mpf(x),
                           12, strip_zeros=False)


@dataclass
class AuditReport:
    system: str
    rows: list = field(default_factory=list)

    def add(self, prop, level, measured, bound, status):
        if isinstance(status, bool):
            status = "pass" if status else "fail"
        self.rows.append((prop, level, measured, bound, status))

    @property
    def passed(self) -> bool:
        return all(r[4] != "fail" for r in self.rows)

    def failures(self):
        return [r for r in self.rows if r[4] == "fail"]

    def by_property(self, prop):
        return [r for r in self.rows if r[0] == prop]

    def to_tsv(self) -> str:
        lines = [HEADER]
        for prop, level, m, b, st in self.rows:
            lines.append(f"{prop}\t{level}\t{fmt(m)}\t{fmt(b)}\t{st}")
        return "\n".join(lines) + "\n"


def rpow(r: Fraction, e: Fraction):
    """r^e: exact Fraction when e is an integer, else an mpmath number."""
    e = Fraction(e)
    if e.denominator == 1:
        return r ** int(e)
    num, ok1 = integer_nthroot(r.numerator, e.denominator)
    den, ok2 = integer_nthroot(r.denominator, e.denominator)
    if ok1 and ok2:
        return Fraction(num, den) ** e.numerator
    with mpmath.workdps(50):
        return mpmath.power(mpmath.mpf(r.numerator) / r.denominator, mpmath.mpf(e.numerator) / e.denominator)


def geq(a, b) -> bool:
    """a >= b for Fractions / mpmath numbers (mpmath at 50 digits)."""
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return a >= b
    with mpmath.workdps(50):
        fa = mpmath.mpf(a.numerator) / a.denominator if isinstance(a, Fraction) else mpmath.mpf(a)
        fb = mpmath.mpf(b.numerator) / b.denominator if isinstance(b, Fraction) else mpmath.mpf(b)
        return fa >= fb


def mul(c, x):
    if isinstance(x, Fraction):
        return c * x
    with mpmath.workdps(50):
        return mpmath.mpf(c.numerator) / c.denominator * x


def fit_exponent(levels, values, r: Fraction):
    """Least-squares slope of log_{1/r}(1/value) against level."""
    with mpmath.workdps(30):
        base = mpmath.log(mpmath.mpf(r.denominator) / r.numerator)
        xs = [mpmath.mpf(j) for j in levels]
        ys = [-mpmath.log(mpmath.mpf(v.numerator) / v.denominator if isinstance(v, Fraction) else v) / base
              for v in values]
        n = len(xs)
        mx, my = sum(xs) / n, sum(ys) / n
        sxx = sum((x - mx) ** 2 for x in xs)
        sxy = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
        slope = sxy / sxx
        return float(slope)


def _exponent_row(rep, prop, levels, values, r, target):
    if len(levels) < 2:
        return
    slope = fit_exponent(levels, values, r)
    ok = abs(Fraction(slope) - target) <= EXPONENT_TOL
    rep.add(prop, f"{levels[0]}..{levels[-1]}", repr(round(slope, 6)), str(target), ok)


# ---------------------------------------------------------------- real systems

def _audit_dyadic(sys: DyadicSystem, L: int, eps: Fraction, rep: AuditReport):
    N = sys.base
    # monotonicity: the level does not depend on w
    ok = all(sys.ell(w2, Fraction(a, N ** min(L, 6))) <= sys.ell(w1, Fraction(a, N ** min(L, 6)))
             for a in range(N ** min(L, 6) + 1) for w1 in (1, 2) for w2 in (2, 3) if w2 > w1)
    rep.add("monotonicity", "all", 0, 0, ok)
    if N == 2:
        add, mul_ = kernels.dyadic_pair_excess(list(range(2 ** L + 1)), L)
    else:
        add = mul_ = -1
        pts = [Fraction(a, N ** L) for a in range(N ** L + 1)]
        for x in pts:
            for y in pts:
                lx, ly = sys.ell_unchecked(x), sys.ell_unchecked(y)
                add = max(add, sys.ell_unchecked(x + y) - max(lx, ly))
                if x and y:
                    mul_ = max(mul_, sys.ell_unchecked(x * y) - lx - ly)
    rep.add("additive", L, max(add, 0), sys.e_add, max(add, 0) <= sys.e_add)
    rep.add("multiplicative", L, max(mul_, 0), sys.e_mul, max(mul_, 0) <= sys.e_mul)
    seps, covs, levels = [], [], []
    for j in range(1, L + 1):
        pts = sys.all_landmarks(1, j)
        nz = [abs(y) for y in pts if y != 0]
        sep = min(nz)
        gaps = [b - a for a, b in zip(pts, pts[1:])]
        pair = min(gaps)
        bound = mul(1 / sys.C1(eps), rpow(sys.r, sys.gamma * j * (1 + eps)))
        rep.add("separation", j, sep, bound, geq(sep, bound))
        rep.add("separation_pairwise", j, pair, bound, geq(pair, bound))
        cov = max([pts[0] - sys.omega[0], sys.omega[1] - pts[-1]] + [g / 2 for g in gaps])
        ub = mul(sys.C2(eps), rpow(sys.r, (sys.sigma - eps) * j))
        rep.add("ubiquity", j, cov, ub, geq(ub, cov))
        rep.add("ubiquity_exact", j, cov, sys.exact_covering_radius(j), cov == sys.exact_covering_radius(j))
        seps.append(sep)
        covs.append(cov)
        levels.append(j)
    _exponent_row(rep, "separation_exponent", levels, seps, sys.r, sys.gamma)
    _exponent_row(rep, "ubiquity_exponent", levels, covs, sys.r, sys.sigma)


def _audit_algebraic(sys: AlgebraicSystem, L: int, eps: Fraction, rep: AuditReport, ws=(1, 2, 3)):
    small = [y for y in sys.all_landmarks(1, min(L, 2))]
    ok = True
    for y in small:
        for w1 in ws:
            for w2 in ws:
                if w2 > w1 and sys.ell(w2, y) > sys.ell(w1, y):
                    ok = False
    rep.add("monotonicity", "all", 0, 0, ok)
    lv = min(L, 2)
    worst_add = worst_mul = -(10 ** 9)
    for w1 in (1, 2):
        for w2 in (1, 2):
            xs = sys.all_landmarks(w1, lv)
            ys = sys.all_landmarks(w2, lv)
            for x in xs:
                lx = sys.ell(w1, x)
                for y in ys:
                    ly = sys.ell(w2, y)
                    la = sys.ell(sys.phi1(w1, w2), x + y)
                    lm = sys.ell(sys.phi2(w1, w2), x * y)
                    worst_add = max(worst_add, la - max(lx, ly))
                    if not (x.is_zero() or y.is_zero()):
                        worst_mul = max(worst_mul, lm - lx - ly)
    rep.add("additive", lv, max(worst_add, 0), 0, worst_add <= 0)
    rep.add("multiplicative", lv, max(worst_mul, 0), 0, worst_mul <= 0)
    for w in ws:
        seps, covs, levels = [], [], []
        c1s, c2s = [], []
        for j in range(1, L + 1):
            iv = sys.min_abs(w, j)
            pair = sys.min_abs(w, j, span=2)
            bound = mul(1 / sys.C1(eps, w), rpow(sys.r, sys.gamma * j * (1 + eps)))
            rep.add(f"separation[w={w}]", j, iv.lo, bound, geq(iv.lo, bound))
            rep.add(f"separation_pairwise[w={w}]", j, pair.lo, bound, "info")
            pts = sys.all_landmarks(w, j)
            ivs = [y.interval() for y in pts]
            cov = max([ivs[0].hi - 0, 1 - ivs[-1].lo] +
                      [(b.hi - a.lo) / 2 for a, b in zip(ivs, ivs[1:])])
            c2 = cov / sys.r ** int(sys.sigma * j)
            declared = sys.C2(eps, w)
            if declared is None:
                rep.add(f"ubiquity[w={w}]", j, cov, None, "info")
            else:
                ub = mul(declared, rpow(sys.r, (sys.sigma - eps) * j))
                rep.add(f"ubiquity[w={w}]", j, cov, ub, geq(ub, cov))
            seps.append(iv.lo)
            covs.append(cov)
            levels.append(j)
            c1s.append(sys.r ** int(sys.gamma * j) / iv.lo)
            c2s.append(c2)
        rep.add(f"separation_constant[w={w}]", f"1..{L}", max(c1s), sys.C1(eps, w),
                max(c1s) <= sys.C1(eps, w))
        rep.add(f"ubiquity_constant[w={w}]", f"1..{L}", max(c2s),
                sys.C2(eps, w), True if sys.C2(eps, w) is None else max(c2s) <= sys.C2(eps, w))
        _exponent_row(rep, f"separation_exponent[w={w}]", levels, seps, sys.r, sys.gamma)
        _exponent_row(rep, f"ubiquity_exponent[w={w}]", levels, covs, sys.r, sys.sigma)


# ---------------------------------------------------------------- ultrametric systems

def _integer_landmarks_fq(sys, k):
    q = sys.q
    return [[(c // q ** i) % q for i in range(k + 1)] for c in range(q ** (k + 1))]


def _pair_excess(sys: UltraSystem, k: int):
    if isinstance(sys, PadicSystem):
        m = sys.ctx.p ** (k + 1)
        return kernels.int_pair_excess(list(range(-(m - 1), m)), sys.ctx.p) + (k,)
    if isinstance(sys, FunctionFieldSystem) and sys.ctx.prime_field:
        return kernels.fp_pair_excess(_integer_landmarks_fq(sys, k), sys.ctx.p) + (k,)
    # generic path: exact big-precision arithmetic on all landmark pairs
    from ..arith.rings import with_precision

    while k > 0 and len(sys.all_landmarks(1, k)) > 400:
        k -= 1
    big = with_precision(sys.ctx, 2 * (k + 2))
    bsys = type(sys)(big)
    pts = bsys.all_landmarks(1, k)
    add = mul_ = -(10 ** 9)
    for x in pts:
        lx = bsys.ell(1, x)
        for y in pts:
            ly = bsys.ell(1, y)
            add = max(add, bsys.ell(1, x + y) - max(lx, ly))
            if not (x.is_zero() or y.is_zero()):
                mul_ = max(mul_, bsys.ell(1, x * y) - lx - ly)
    return add, mul_, k


def _audit_ultra(sys: UltraSystem, L: int, eps: Fraction, rep: AuditReport):
    P = sys.precision
    L = min(L, P - 1)
    pts = sys.all_landmarks(1, L)
    ok = all(sys.ell(2, y) <= sys.ell(1, y) for y in pts[:2000])
    rep.add("monotonicity", "all", 0, 0, ok)
    add, mul_, lv = _pair_excess(sys, L)
    rep.add("additive", lv, max(add, 0), sys.e_add, max(add, 0) <= sys.e_add)
    rep.add("multiplicative", lv, max(mul_, 0), sys.e_mul, max(mul_, 0) <= sys.e_mul)
    ctx = sys.ctx
    q = sys.q
    seps, covs, levels = [], [], []
    all_codes = range(q ** P)
    for j in range(0, L + 1):
        lm = sys.all_landmarks(1, j)
        nz = [sys.abs(y) for y in lm if not y.is_zero()]
        sep = min(nz)
        bound = mul(1 / sys.C1(eps), rpow(sys.r, sys.gamma * j * (1 + eps)))
        rep.add("separation", j, sep, bound, geq(sep, bound))
        pair = _pairwise_min(sys, lm)
        rep.add("separation_pairwise", j, pair, bound, "pass" if geq(pair, bound) else "info")
        # covering radius over residue classes at the working precision
        prefixes = [set(ctx.code(y, t) for y in lm) for t in range(P + 1)]
        worst = 0
        for code in all_codes:
            t = P
            while t > 0 and code % q ** t not in prefixes[t]:
                t -= 1
            worst = max(worst, P - t)
            if worst == P:
                break
        cov = Fraction(1, q) ** (P - worst)
        ub = mul(sys.C2(eps), rpow(sys.r, (sys.sigma - eps) * j))
        rep.add("ubiquity", j, cov, ub, geq(ub, cov))
        rep.add("ubiquity_exact", j, cov, sys.exact_covering_radius(j), cov == sys.exact_covering_radius(j))
        if j >= 1:
            seps.append(sep)
            covs.append(cov)
            levels.append(j)
    _exponent_row(rep, "separation_exponent", levels, seps, sys.r, sys.gamma)
    _exponent_row(rep, "ubiquity_exponent", levels, covs, sys.r, sys.sigma)


def _pairwise_min(sys, lm):
    P = sys.precision
    codes = sorted(sys.ctx.code(y, P) for y in lm)
    best = 0
    # the largest shared prefix length between two distinct landmarks
    q = sys.q
    for t in range(P, 0, -1):
        seen = set()
        dup = False
        for c in codes:
            k = c % q ** t
            if k in seen:
                dup = True
                break
            seen.add(k)
        if dup:
            best = t
            break
    if len(set(codes)) < len(lm):
        best = P
    return Fraction(1, sys.q) ** best


def audit_system(sys: LandmarkSystem, max_level: int, eps=Fraction(0), **kw) -> AuditReport:
    eps = Fraction(eps)
    beta = getattr(sys, "beta", 1)
    rep = AuditReport(sys.kind if beta == 1 else f"{sys.kind}[beta={beta}]")
    if isinstance(sys, DyadicSystem):
        _audit_dyadic(sys, max_level, eps, rep)
    elif isinstance(sys, AlgebraicSystem):
        _audit_algebraic(sys, max_level, eps, rep, **kw)
    elif isinstance(sys, UltraSystem):
        _audit_ultra(sys, max_level, eps, rep)
    else:
        raise TypeError(f"no audit for {type(sys).__name__}")
    return rep
