"""Single-scale avoidance: landmark boxes, shifted off the zero set of f.

Given target cube families T_1..T_v, a polynomial f with a certified
nonvanishing partial derivative and a landmark pair, every target cube is
partitioned into cells V, one landmark y(V) is picked per cell, and a small
box near each landmark is kept.  Boxes of the derivative's block are pushed
half a box-width along the certified direction so that |f| stays bounded
below on every product of kept boxes.  Each product is certified by one of:

  case1   the enclosure of f over the full landmark boxes avoids a
          C1 r^E neighbourhood of 0;
  case2   the first-order chain |f(x)| >= c h - |f(y)| - C1 |x - y*| holds
          with the actual shift h and the exact value f(y);
  direct  the enclosure of f over the kept product itself clears the bound.

Over local fields every value is an exact valuation, so case2 and direct
coincide and the certified bound is attained exactly.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

import numpy as np

from . import kernels
from .errors import Indeterminate, PairLevelUnusable, UbiquityFailure, CertificationFailure, NotInDomain
from .arith.algebraic import AlgebraicElement
from .arith.enclose import enclose_real, enclose_ultra
from .arith.fq import FqContext
from .arith.interval import Interval
from .geometry import Cube, CubeSet, subdivide
from .powers import rpow_hi, rpow_lo, ceil_frac, floor_frac, fmt_q

EPS_SWEEP = tuple(Fraction(1, 2 ** k) for k in range(1, 11))


# ---------------------------------------------------------------- derivative certificates

@dataclass(frozen=True)
class DerivativeCertificate:
    """|df/dx_{block,coord}| >= c on the product; C1 bounds the l1 gradient norm."""

    block: int
    coord: int
    c: Fraction
    C1: Fraction
    valuation: int = None   # ultrametric: c == r^valuation

    def label(self) -> str:
        return f"block {self.block + 1} coord {self.coord + 1}"


def _cube_list(t):
    if isinstance(t, Cube):
        return [t]
    return list(t)


def common_ancestor(cubes) -> Cube:
    s = min(c.scale for c in cubes)
    while True:
        anc = {c.ancestor(s) for c in cubes}
        if len(anc) == 1:
            return anc.pop()
        s -= 1


def hull_intervals(cubes):
    ivs = [c.intervals() for c in cubes]
    n = len(ivs[0])
    return [Interval(min(b[i].lo for b in ivs), max(b[i].hi for b in ivs)) for i in range(n)]


def _block_geometry(f, targets):
    blocks = [_cube_list(t) for t in targets]
    if len(blocks) != f.v:
        raise ValueError(f"expected {f.v} target sets, got {len(blocks)}")
    return blocks, blocks[0][0].grid


def certify_derivative(f, targets, method: str = "tight"):
    """Certificate for the partial derivative with the largest lower bound.

    The product of targets is replaced by the product of per-block hulls
    (common ancestor balls over local fields), which only enlarges it.
    Ties go to the first (block, coord) in canonical order.  Returns an
    ``Indeterminate`` value when no partial derivative excludes 0.
    """
    blocks, grid = _block_geometry(f, targets)
    best = None
    if grid.ultrametric:
        ring = f.ring
        centers, scales = [], []
        for cs in blocks:
            a = common_ancestor(cs)
            centers.extend(a.center_elements(ring))
            scales.extend([a.scale] * grid.n)
        grad = Fraction(0)
        for b in range(f.v):
            for k in range(f.n):
                g = f.partial(b, k)
                if g.is_zero():
                    continue
                enc = enclose_ultra(g, centers, scales)
                grad = max(grad, enc.abs_upper(grid.r))
                if enc.exact:
                    c = grid.r ** enc.valuation
                    if best is None or c > best[2]:
                        best = (b, k, c, enc.valuation)
        if best is None:
            return Indeterminate("no partial derivative has constant absolute value on the product")
        return DerivativeCertificate(best[0], best[1], best[2], max(Fraction(1), best[2], grad), best[3])
    box = []
    for cs in blocks:
        box.extend(hull_intervals(cs))
    grad = Fraction(0)
    for b in range(f.v):
        for k in range(f.n):
            g = f.partial(b, k)
            enc = enclose_real(g, box, method=method)
            grad += enc.mag()
            c = enc.mig()
            if c > 0 and (best is None or c > best[2]):
                best = (b, k, c)
    if best is None:
        return Indeterminate("every partial derivative enclosure contains 0")
    return DerivativeCertificate(best[0], best[1], best[2], max(Fraction(1), best[2], grad))


# ---------------------------------------------------------------- scales and inequalities

@dataclass(frozen=True)
class Scales:
    j: int
    eps: Fraction
    s: int
    n: int
    sV: int          # partition scale ceil((sigma - 4 eps) j)
    sVp: int         # shrunken cell scale (real) or sV
    E: Fraction      # (gamma + eps) d j
    L: int           # ceil(E)
    L0: int          # floor(E): side exponent of the landmark boxes
    m: int           # c* = r^m
    Ls: int          # survivor scale L + m
    ultrametric: bool


def _cstar_exponent(r: Fraction, c: Fraction, C1: Fraction, n: int, ultrametric: bool) -> int:
    """Smallest m with r^m < c / (4 C1 sqrt n) (real) or r^m < c / C1 (ultrametric)."""
    m = 0
    while True:
        x = r ** m
        if ultrametric:
            if x < c / C1:
                return m
        elif 16 * x * x * C1 * C1 * n < c * c:
            return m
        m += 1


def compute_scales(pair, j: int, eps, s: int, n: int, cert: DerivativeCertificate, ultrametric: bool) -> Scales:
    eps = Fraction(eps)
    sigma, gamma, d = pair.sigma, pair.gamma, Fraction(pair.degree)
    sV = ceil_frac((sigma - 4 * eps) * j)
    sVp = sV if ultrametric else ceil_frac((sigma - 3 * eps) * j)
    E = (gamma + eps) * d * j
    L = ceil_frac(E)
    L0 = floor_frac(E)
    m = _cstar_exponent(pair.r, cert.c, cert.C1, n, ultrametric)
    return Scales(j, eps, s, n, sV, sVp, E, L, L0, m, L + m, ultrametric)


def shift_steps(sc: Scales, r: Fraction) -> int:
    """Grid steps at the survivor scale covering half the nominal box width r^E."""
    return ceil_frac(rpow_hi(r, sc.E) / 2 / r ** sc.Ls)


def bound_constant(sc: Scales, cert: DerivativeCertificate, r: Fraction):
    """(certified bound, c') with bound <= |f| on kept products and c' r^E <= bound."""
    if sc.ultrametric:
        b = cert.c * r ** sc.L
        return b, b / rpow_hi(r, sc.E)
    cp = Fraction(3) * cert.c / 64
    return cp * rpow_lo(r, sc.E), cp


def count_constant(sc: Scales, cert, r: Fraction) -> Fraction:
    _, cp = bound_constant(sc, cert, r)
    return min(cp, r ** (sc.n * sc.s))


def proposition_checks(pair, sc: Scales, cert, precision=None, strict_counts=False):
    """The structural inequalities of the single-scale argument at (j, eps).

    Returns a list of (name, ok, detail).  The survivor-count upper bound is
    the partition count r^-n(sV - s) against r^-n(sigma - 4 eps) j; since the
    partition scale is a ceiling the default check allows one grid step of
    rounding (a factor r^-n), ``strict_counts`` drops that allowance.
    """
    r = pair.r
    sigma = pair.sigma
    j, eps, n, s = sc.j, sc.eps, sc.n, sc.s
    out = []
    out.append(("sigma-5eps>0", sigma - 5 * eps > 0, f"{sigma - 5 * eps}"))
    out.append(("partition>=target", sc.sV >= s, f"sV={sc.sV} s={s}"))
    out.append(("box<cell", sc.E > sc.sVp, f"E={sc.E} sV'={sc.sVp}"))
    out.append(("single-intersection", ceil_frac(sigma * j) >= sc.sV, f"ceil(sigma j)={ceil_frac(sigma * j)}"))
    up = (sigma - 4 * eps) * j + (0 if strict_counts else 1)
    out.append(("count-upper", sc.sV - s <= up, f"{sc.sV - s}<={up}"))
    cc = count_constant(sc, cert, r)
    expo = n * (sigma - 5 * eps) * j - n * (sc.sV - s)
    out.append(("count-lower", cc <= rpow_lo(r, expo), f"c'={cc} exponent {expo}"))
    if sc.ultrametric:
        out.append(("precision", precision is None or sc.Ls <= precision, f"Ls={sc.Ls} P={precision}"))
    else:
        h = shift_steps(sc, r)
        out.append(("shift-fits", (h + 1) * r ** sc.Ls <= r ** sc.L0, f"h={h} steps at scale {sc.Ls}"))
    return out


def epsilon_star(pair, j: int, s: int, n: int, cert, ultrametric: bool, precision=None):
    """Largest eps in {1/2, ..., 1/1024} for which every structural inequality holds."""
    for e in EPS_SWEEP:
        sc = compute_scales(pair, j, e, s, n, cert, ultrametric)
        if all(ok for _, ok, _ in proposition_checks(pair, sc, cert, precision)):
            return e
    return None


# ---------------------------------------------------------------- landmark selection

def _real_landmark(sys, V: Cube, sc: Scales):
    """Canonical minimal landmark y in the shrunken cell V' whose box [y, y + r^L0] stays in V."""
    r = V.grid.r
    side, sidep = r ** sc.sV, r ** sc.sVp
    box = r ** sc.L0
    y = []
    for iv in V.intervals():
        lo = iv.lo + (side - sidep) / 2
        hi = lo + sidep
        cands = [a for a in sys.enumerate(1, lo, min(hi, iv.hi - box), sc.j, closed=True)]
        if not cands:
            raise UbiquityFailure(f"no level-{sc.j} landmark in the shrunken cell of {V}")
        y.append(cands[0])
    return tuple(y)


def _ultra_landmark(sys, V: Cube, sc: Scales):
    ctx = sys.ctx
    per = []
    for code in V.coords:
        cands = sys.enumerate(1, code, V.scale, sc.j)
        if not cands:
            raise UbiquityFailure(f"no level-{sc.j} landmark in {V}")
        per.append(min(cands, key=lambda e: ctx.code(e, ctx.precision)))
    return tuple(per)


def select_landmarks(sys, U: Cube, sc: Scales):
    """[(V, y(V))] over the cells of U at the partition scale, canonical order."""
    out = []
    pick = _ultra_landmark if U.grid.ultrametric else _real_landmark
    for V in subdivide(U, sc.sV):
        out.append((V, pick(sys, V, sc)))
    return out


def check_domain(sys, targets):
    om = getattr(sys, "omega", None)
    if om is None:
        return
    for t in targets:
        for c in _cube_list(t):
            for iv in c.intervals():
                if iv.lo < om[0] or iv.hi > om[1]:
                    raise NotInDomain(f"{c} leaves the landmark domain {om}")


# ---------------------------------------------------------------- survivor cubes

def survivor_cube(grid, y, offset, sc: Scales) -> Cube:
    """Kept cube for landmark y: anchored at y (+offset) at the survivor scale.

    Real offsets count grid steps at the survivor scale; ultrametric offsets
    are digits placed at position L.
    """
    if grid.ultrametric:
        ring = grid.ring
        coords = []
        for x, u in zip(y, offset):
            z = x + ring.digit_monomial(u, sc.L) if u else x
            coords.append(ring.code(z, sc.Ls))
        return Cube(coords, sc.Ls, grid)
    k = grid.rinv ** sc.Ls
    return Cube([int(x * k) + u for x, u in zip(y, offset)], sc.Ls, grid)


def shifted_point(grid, y, offset, sc: Scales):
    if grid.ultrametric:
        ring = grid.ring
        return tuple(x + ring.digit_monomial(u, sc.L) if u else x for x, u in zip(y, offset))
    step = grid.r ** sc.Ls
    return tuple(x + u * step for x, u in zip(y, offset))


# ---------------------------------------------------------------- evaluation helpers

def abs_upper(val) -> Fraction:
    if isinstance(val, AlgebraicElement):
        return val.interval().mag()
    return abs(Fraction(val))


class UltraValuations:
    """Batch valuations of f at points of the ring of integers.

    Prime-field function-field rings go through the compiled kernel; other
    rings evaluate term by term in exact ring arithmetic.
    """

    def __init__(self, f):
        self.f = f
        ctx = f.ring
        self.ctx = ctx
        self.fast = isinstance(ctx, FqContext) and ctx.prime_field
        if self.fast:
            P = ctx.precision
            self.coeffs = np.array([[(c.coeffs[i] if i < len(c.coeffs) else 0) for i in range(P)]
                                    for c in (f.terms[e] for e in f.order)], dtype=np.int64)
            self.exps = np.array([list(e) for e in f.order], dtype=np.int64).reshape(len(f.order), f.nvars)

    def digits(self, x):
        P = self.ctx.precision
        c = x.coeffs
        return [c[i] if i < len(c) else 0 for i in range(P)]

    def __call__(self, points):
        """points: list of flat tuples of ring elements."""
        if not points:
            return np.zeros(0, dtype=np.int64)
        if self.fast and self.f.terms:
            arr = np.array([[self.digits(x) for x in pt] for pt in points], dtype=np.int64)
            return np.asarray(kernels.fp_poly_valuations(self.coeffs, self.exps, arr, self.ctx.p,
                                                         self.ctx.precision))
        val = self.ctx.valuation
        return np.array([val(self.f.eval(list(pt))) for pt in points], dtype=np.int64)


# ---------------------------------------------------------------- certification of one product

class ProductCertifier:
    """Certifies |f| >= bound on products of kept cubes, one landmark tuple at a time."""

    def __init__(self, f, grid, cert, sc: Scales, method: str = "tight"):
        self.f = f
        self.grid = grid
        self.cert = cert
        self.sc = sc
        self.method = method
        r = grid.r
        self.r = r
        self.bound, self.cprime = bound_constant(sc, cert, r)
        self.rE_hi = rpow_hi(r, sc.E)
        if grid.ultrametric:
            # case 1 threshold: largest v with r^v >= C1 r^E
            v = sc.L
            while v >= 0 and r ** v < cert.C1 * self.rE_hi:
                v -= 1
            self.v_case1 = v
            self.v_bound = sc.L + (cert.valuation or 0)
            self.vals = UltraValuations(f)
        else:
            self.case1_threshold = cert.C1 * self.rE_hi
            self.bound_hi = Fraction(3) * cert.c / 64 * self.rE_hi

    # -- ultrametric
    def ultra_case1(self, valuations):
        """Boolean mask of tuples settled by case 1 given v(f(y))."""
        return valuations <= self.v_case1

    def ultra_kept_ok(self, valuations):
        """Kept products are certified iff v(f(y*)) <= L + v(c); then |f| == r^v on them."""
        return valuations <= self.v_bound

    # -- real
    def _flat(self, ys):
        return [x for y in ys for x in y]

    def real_case1(self, ys):
        box = []
        side = self.r ** self.sc.L0
        for x in self._flat(ys):
            box.append(Interval(x, x + side))
        enc = enclose_real(self.f, box, method=self.method)
        lo = enc.mig()
        return lo >= self.case1_threshold, lo

    def real_kept(self, ys, offsets, shift_block=None):
        """(case, certified lower bound) for the kept product, or (None, best attempt)."""
        f = self.f
        side = self.r ** self.sc.Ls
        stars = [shifted_point(self.grid, y, o, self.sc) for y, o in zip(ys, offsets)]
        if shift_block is not None:
            b, k = shift_block
            h = offsets[b][k] * side
            if h > 0 and all(not any(o) for i, o in enumerate(offsets) if i != b) \
                    and sum(1 for u in offsets[b] if u) == 1:
                fy = abs_upper(f.eval(self._flat(ys)))
                chain = self.cert.c * h - fy - self.cert.C1 * side
                if chain >= self.bound_hi:
                    return "case2", chain
        box = [Interval(x, x + side) for x in self._flat(stars)]
        lo = enclose_real(f, box, method=self.method).mig()
        if lo >= self.bound_hi:
            return "direct", lo
        return None, lo


# ---------------------------------------------------------------- the proposition

@dataclass
class AvoidanceInput:
    targets: list
    f: object
    pair: object
    eps: Fraction
    j: int
    cert: DerivativeCertificate = None
    method: str = "tight"


@dataclass
class AvoidanceOutput:
    survivors: list
    landmark_log: list
    bound: Fraction
    cprime: Fraction
    scales: Scales
    eps_star: Fraction
    cert: DerivativeCertificate
    case_counts: dict
    min_lower: Fraction
    attained: Fraction = None
    shift: tuple = None
    checks: list = field(default_factory=list)

    def counts_per_target(self):
        """Per block: list of (target cube, number of kept cubes inside it)."""
        out = []
        for blk, log in zip(self.survivors, self.landmark_log):
            per = {}
            for U, V, y, cube in log:
                per[U] = per.get(U, 0) + 1
            out.append(sorted(per.items()))
        return out

    def certificate_lines(self):
        sc = self.scales
        lines = [
            f"derivative\t{self.cert.label()}\tc={self.cert.c}\tC1={self.cert.C1}",
            f"scales\tj={sc.j}\teps={sc.eps}\teps_star={self.eps_star}\tsV={sc.sV}\tsV'={sc.sVp}"
            f"\tE={sc.E}\tL={sc.L}\tm={sc.m}\tLs={sc.Ls}",
            f"bound\t{fmt_q(self.bound)}\tc'={fmt_q(self.cprime)}",
            f"shift\t{self.shift}",
        ]
        for case in sorted(self.case_counts):
            cnt, low = self.case_counts[case]
            lines.append(f"case\t{case}\tcount={cnt}\tmin_lower={fmt_q(low)}\tslack={fmt_q(low - self.bound)}")
        if self.attained is not None:
            lines.append(f"attained\t{self.attained}")
        for name, ok, detail in self.checks:
            lines.append(f"check\t{name}\t{'pass' if ok else 'fail'}\t{detail}")
        return lines

    def serialize(self) -> str:
        parts = []
        for k, cs in enumerate(self.survivors):
            parts.append(f"# survivors block {k + 1}\n" + cs.serialize())
        parts.append("# certificate\n" + "\n".join(self.certificate_lines()) + "\n")
        return "".join(parts)


def _target_scale(blocks):
    scales = {c.scale for cs in blocks for c in cs}
    if len(scales) != 1:
        raise ValueError("all target cubes must share one scale")
    return scales.pop()


def run_avoidance(inp: AvoidanceInput) -> AvoidanceOutput:
    f, pair, j = inp.f, inp.pair, inp.j
    eps = Fraction(inp.eps)
    blocks, grid = _block_geometry(f, inp.targets)
    ultra = grid.ultrametric
    n = grid.n
    s = _target_scale(blocks)
    sys = pair.system
    check_domain(sys, blocks)
    cert = inp.cert if inp.cert is not None else certify_derivative(f, blocks, inp.method)
    if isinstance(cert, Indeterminate):
        raise CertificationFailure(f"no derivative certificate: {cert}")
    if not pair.in_J(j):
        raise PairLevelUnusable(f"level {j} is not in the pair's index set")
    precision = getattr(grid.ring, "precision", None) if ultra else None
    eps_star = epsilon_star(pair, j, s, n, cert, ultra, precision)
    if eps_star is None or not 0 < eps < eps_star:
        raise PairLevelUnusable(f"eps={eps} is not below eps*={eps_star} at level {j}")
    sc = compute_scales(pair, j, eps, s, n, cert, ultra)
    checks = proposition_checks(pair, sc, cert, precision)
    bad = [c for c in checks if not c[1]]
    if bad:
        raise PairLevelUnusable(f"inequalities fail at level {j}: {bad}")
    err = pair.witness_error(j)
    if err > cert.c / 8 * rpow_lo(pair.r, sc.E):
        raise PairLevelUnusable(f"witness error {err} exceeds (c/8) r^E at level {j}")
    checks.append(("witness-error", True, f"{err}"))
    extra = pair.degree * j + pair.const <= (pair.degree + eps) * j
    checks.append(("output-level<=(d+eps)j", extra, f"{pair.degree * j + pair.const} vs {(pair.degree + eps) * j}"))

    Y = []
    for cs in blocks:
        ys = []
        for U in cs:
            for V, y in select_landmarks(sys, U, sc):
                ys.append((U, V, y))
        Y.append(ys)

    certifier = ProductCertifier(f, grid, cert, sc, inp.method)
    zero = (0,) * n
    if ultra:
        shift, cases, attained = _certify_ultra(f, grid, cert, sc, Y, certifier)
    else:
        shift, cases, attained = _certify_real(f, grid, cert, sc, Y, certifier)
    survivors, log = [], []
    for k, ys in enumerate(Y):
        off = shift if k == cert.block else zero
        cubes, lg = [], []
        for U, V, y in ys:
            cube = survivor_cube(grid, y, off, sc)
            cubes.append(cube)
            lg.append((U, V, y, cube))
        survivors.append(CubeSet(cubes, sc.Ls, grid))
        log.append(lg)
    min_lower = min(low for _, low in cases.values())
    return AvoidanceOutput(survivors, log, certifier.bound, certifier.cprime, sc, eps_star, cert, cases,
                           min_lower, attained, shift, checks)


def _flat_tuple(ys):
    return tuple(x for y in ys for x in y)


def _certify_ultra(f, grid, cert, sc, Y, cz: ProductCertifier):
    n = grid.n
    r = grid.r
    ys_lists = [[y for _, _, y in blk] for blk in Y]
    tuples = list(product(*[range(len(b)) for b in ys_lists]))
    pts = [_flat_tuple([ys_lists[k][i] for k, i in enumerate(t)]) for t in tuples]
    v0 = cz.vals(pts)
    c1 = cz.ultra_case1(v0)
    cases = {}
    if c1.any():
        cases["case1"] = (int(c1.sum()), r ** int(v0[c1].max()))
    rest = [t for t, ok in zip(tuples, c1) if not ok]
    if not rest:
        return (0,) * n, cases, min(r ** int(v) for v in v0) if len(v0) else None
    q = grid.rinv
    for u in range(1, q):
        off = [0] * n
        off[cert.coord] = u
        off = tuple(off)
        spts = []
        for t in rest:
            ys = [ys_lists[k][i] for k, i in enumerate(t)]
            ys[cert.block] = shifted_point(grid, ys[cert.block], off, sc)
            spts.append(_flat_tuple(ys))
        vs = cz.vals(spts)
        if cz.ultra_kept_ok(vs).all():
            cases["case2"] = (len(rest), r ** int(vs.max()))
            att = r ** int(vs.max())
            if c1.any():
                att = min(att, r ** int(v0[c1].max()))
            return off, cases, att
    raise CertificationFailure("no digit shift certifies every landmark tuple")


def _certify_real(f, grid, cert, sc, Y, cz: ProductCertifier):
    n = grid.n
    h = shift_steps(sc, grid.r)
    off = [0] * n
    off[cert.coord] = h
    off = tuple(off)
    zero = (0,) * n
    cases = {}
    ys_lists = [[y for _, _, y in blk] for blk in Y]
    for t in product(*ys_lists):
        ok, low = cz.real_case1(list(t))
        if ok:
            case = "case1"
        else:
            offs = [off if k == cert.block else zero for k in range(len(t))]
            case, low = cz.real_kept(list(t), offs, (cert.block, cert.coord))
            if case is None:
                raise CertificationFailure(f"landmark tuple {t} is not certified (best lower bound {low})")
        cnt, mn = cases.get(case, (0, None))
        cases[case] = (cnt + 1, low if mn is None else min(mn, low))
    # case 1 covers the whole landmark box, so without other cases no shift is needed
    return (zero if set(cases) == {"case1"} else off), cases, None
