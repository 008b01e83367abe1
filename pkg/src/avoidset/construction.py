"""Multi-stage construction: scenarios, the entry queue, stages and traces.

Two drivers share the same trace format:

* ``build`` follows the staged schedule: one queue entry per stage, each at
  the smallest level N_j passing the sizing rule (or a fixed override).
* ``build_uniform`` processes every stage-0 entry of the first function at
  one shared level N.  All cells get one offset each (a digit or a
  half-box step), chosen by a small constraint search so that every cube
  tuple is certified at once.  This is a desk-scale surrogate of the staged
  schedule, labelled as such in every export.
"""
from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field, replace
from fractions import Fraction
from itertools import product

import numpy as np

from .arith.enclose import enclose_real, enclose_ultra
from .arith.fq import FqContext
from .arith.interval import Interval
from .arith.poly import parse_poly
from .arith.rings import context_from_mapping, parse_exact, parse_vector
from .avoidance import (AvoidanceInput, DerivativeCertificate, ProductCertifier, UltraValuations, abs_upper,
                        bound_constant, certify_derivative, check_domain, compute_scales, count_constant,
                        epsilon_star, proposition_checks, run_avoidance, select_landmarks, shift_steps,
                        survivor_cube, shifted_point, _cstar_exponent)
from .csp import OffsetCSP, encode
from .errors import (CertificationFailure, ConfigError, Indeterminate, PairLevelUnusable, SizingCapExceeded)
from .geometry import (Cube, CubeSet, Grid, TupleCursor, falling_factorial, real_grid, subdivide, trim_border,
                       ultra_grid)
from .landmark.pairs import build_rational_approx_pair, derive_polynomial_pair
from .landmark.systems import DyadicSystem, system_for
from .powers import ceil_frac, floor_frac, fmt_q, rpow_hi, rpow_lo

EPS_DENOM = 10 ** 6


# ---------------------------------------------------------------- scenarios

@dataclass
class FunctionSpec:
    index: int                  # 1-based
    poly: object
    chain: tuple                # ((block, coord), ...), 0-based
    pair_kind: str = "polynomial"
    pair_params: dict = field(default_factory=dict)

    @property
    def v(self) -> int:
        return self.poly.v

    @property
    def alpha(self) -> int:
        return len(self.chain)

    def derivative(self, k: int):
        """D_k f: the first k picks of the chain applied to f."""
        return self.poly.apply_chain(self.chain[:k])


@dataclass
class Scenario:
    name: str
    ring: object
    grid: Grid
    base: Cube
    functions: list
    mode: str = "uniform"
    uniform_depth: int = 4
    stages: int = 1
    eps: Fraction = None          # fixed epsilon for every stage (None: schedule)
    levels: tuple = ()            # fixed N_j overrides for the staged driver
    cap: int = 4096
    survivor_margin: int = None   # extra survivor depth when no derivative certificate exists
    method: str = "tight"
    system_params: dict = field(default_factory=dict)
    source: str = ""

    @property
    def n(self) -> int:
        return self.grid.n

    @property
    def ultrametric(self) -> bool:
        return self.grid.ultrametric

    def system(self):
        if self.ultrametric:
            return system_for(self.ring)
        return DyadicSystem(base=self.grid.rinv, **self.system_params)

    def eps_for(self, j: int) -> Fraction:
        """Scheduled epsilon at stage j >= 1: sigma / (10^6 (j + 1)) unless fixed."""
        if self.eps is not None:
            return self.eps
        return self.system().sigma / (EPS_DENOM * (j + 1))

    def pair_for(self, fs: FunctionSpec, k: int):
        g = fs.derivative(k)
        if fs.pair_kind == "polynomial":
            return derive_polynomial_pair(self.system(), g)
        if fs.pair_kind == "rational-approx":
            p = fs.pair_params
            return build_rational_approx_pair(g, p["tau"], p["alpha"], int(p["budget"]))
        raise ConfigError(f"unknown pair kind {fs.pair_kind!r}")


def _parse_chain(text: str, blocks, n: int):
    picks = []
    for tok in text.replace(";", ",").split(","):
        tok = tok.strip()
        if not tok:
            continue
        name, _, coord = tok.partition(":")
        name = name.strip()
        if name not in blocks:
            raise ConfigError(f"chain names unknown block {name!r}")
        c = int(coord) - 1 if coord else 0
        if not 0 <= c < n:
            raise ConfigError(f"chain coordinate out of range in {tok!r}")
        picks.append((blocks.index(name), c))
    return tuple(picks)


def _read_parser(text: str) -> configparser.ConfigParser:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed scenario: {exc}") from None
    return cp


def parse_scenario(text: str, precision: int = None) -> Scenario:
    """Scenario from sectioned key/value text (see scenarios/README for the grammar)."""
    cp = _read_parser(text)
    for sec in ("scenario", "field", "space"):
        if not cp.has_section(sec):
            raise ConfigError(f"missing [{sec}] section")
    fld = dict(cp["field"])
    if precision is not None:
        fld["precision"] = str(precision)
    ring = context_from_mapping(fld)
    sp = cp["space"]
    n = int(parse_exact(sp.get("n", "1")))
    if fld.get("kind") in ("dyadic", "real", "rational"):
        grid = real_grid(n, int(parse_exact(fld.get("base", "2"))))
    elif getattr(ring, "archimedean", True) is False:
        grid = ultra_grid(n, ring)
    else:
        raise ConfigError("only dyadic real grids and local fields are supported as spaces")
    s0 = int(parse_exact(sp.get("base_scale", "0")))
    base = parse_vector(sp.get("base", " ".join(["0"] * n)))
    if len(base) != n:
        raise ConfigError("base cube needs n coordinates")
    B = Cube(base, s0, grid)
    funcs = []
    fsecs = sorted((s for s in cp.sections() if s.startswith("function")),
                   key=lambda s: int(s.partition(".")[2] or 1))
    if not fsecs:
        raise ConfigError("no [function.K] section")
    for i, sec in enumerate(fsecs):
        m = cp[sec]
        blocks = [b.strip() for b in m.get("blocks", "").split(",") if b.strip()]
        v = int(parse_exact(m["v"])) if "v" in m else len(blocks)
        if not blocks:
            blocks = [f"x{b + 1}" for b in range(v)]
        if len(blocks) != v:
            raise ConfigError(f"[{sec}] lists {len(blocks)} blocks but v = {v}")
        poly = parse_poly(m["poly"], n, v, ring, blocks)
        chain = _parse_chain(m.get("chain", ""), blocks, n)
        kind = m.get("pair", "polynomial").strip()
        params = {}
        for key in ("tau", "alpha", "budget"):
            if key in m:
                params[key] = parse_exact(m[key])
        funcs.append(FunctionSpec(i + 1, poly, chain, kind, params))
    sc = cp["scenario"]
    sched = cp["schedule"] if cp.has_section("schedule") else {}
    eps = sched.get("eps", "auto").strip() if sched else "auto"
    out = Scenario(
        name=sc.get("name", "scenario").strip(),
        ring=ring, grid=grid, base=B, functions=funcs,
        mode=sc.get("mode", "uniform").strip(),
        uniform_depth=int(parse_exact(sc.get("uniform_depth", "4"))),
        stages=int(parse_exact(sc.get("stages", "1"))),
        eps=None if eps == "auto" else Fraction(parse_exact(eps)),
        levels=tuple(int(x) for x in parse_vector(sched.get("levels", ""))) if sched else (),
        cap=int(parse_exact(sched.get("cap", "4096"))) if sched else 4096,
        survivor_margin=(int(parse_exact(sched["survivor_margin"])) if sched and "survivor_margin" in sched
                         else None),
        method=sc.get("enclosure", "tight").strip(),
        source=text,
    )
    if out.mode not in ("uniform", "paper"):
        raise ConfigError(f"unknown mode {out.mode!r}")
    validate_scenario(out)
    return out


def load_scenario(path, precision: int = None) -> Scenario:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read scenario: {exc}") from None
    return parse_scenario(text, precision)


def _box_of(c: Cube, v: int):
    return [iv for _ in range(v) for iv in c.intervals()]


def terminal_certified(sc: Scenario, fs: FunctionSpec) -> bool:
    """The chain's terminal derivative has a zero-free enclosure on B^v."""
    g = fs.derivative(fs.alpha)
    if g.is_zero():
        return False
    if sc.ultrametric:
        centers = sc.base.center_elements(sc.ring) * fs.v
        enc = enclose_ultra(g, centers, [sc.base.scale] * (sc.n * fs.v))
        return enc.exact
    return enclose_real(g, _box_of(sc.base, fs.v), method="tight").excludes_zero()


def validate_scenario(sc: Scenario):
    for fs in sc.functions:
        if fs.alpha == 0:
            raise ConfigError(f"function {fs.index} has an empty derivative chain")
        if not terminal_certified(sc, fs):
            raise ConfigError(f"function {fs.index}: terminal derivative of the chain is not certified on B")
    if sc.eps is not None:
        sigma = sc.system().sigma
        if not 0 < sc.eps < sigma / EPS_DENOM:
            raise ConfigError(f"eps must lie in (0, sigma/10^6); got {sc.eps}")


# ---------------------------------------------------------------- queue

@dataclass(frozen=True)
class QueueEntry:
    q: int          # 1-based function index
    k: int          # derivative depth
    tau: tuple      # injection into the cubes of the enrolling stage
    j0: int         # enrolling stage

    def label(self) -> str:
        return f"q={self.q} k={self.k} tau={'-'.join(str(t + 1) for t in self.tau)} j0={self.j0}"


class EntryQueue:
    """Block descriptors plus a resumable cursor; tuples are never materialised.

    Within a block entries run by function index, then injection in
    lexicographic order, then derivative depth from high to low.
    """

    def __init__(self, functions):
        self.vs = [fs.v for fs in functions]
        self.alphas = [fs.alpha for fs in functions]
        self.blocks = []            # (j0, number of functions, number of cubes)
        self.state = None           # (block index, q, tau, k) of the head, or ("wait", block index)

    def add_block(self, j0: int, nfuncs: int, M: int):
        self.blocks.append((j0, min(nfuncs, len(self.vs)), M))
        if self.state is None:
            self.state = self._first(0)
        elif self.state[0] == "wait":
            self.state = self._first(self.state[1])

    def block_length(self, b: int) -> int:
        _, nf, M = self.blocks[b]
        return sum(self.alphas[q] * falling_factorial(M, self.vs[q]) for q in range(nf) if M >= self.vs[q])

    def _first(self, bi: int):
        while bi < len(self.blocks):
            _, nf, M = self.blocks[bi]
            for q in range(nf):
                if M >= self.vs[q]:
                    return (bi, q, tuple(range(self.vs[q])), self.alphas[q] - 1)
            bi += 1
        return ("wait", bi)

    def _next_q(self, bi: int, q: int):
        _, nf, M = self.blocks[bi]
        for q2 in range(q + 1, nf):
            if M >= self.vs[q2]:
                return (bi, q2, tuple(range(self.vs[q2])), self.alphas[q2] - 1)
        return self._first(bi + 1)

    def empty(self) -> bool:
        return self.state is None or self.state[0] == "wait"

    def peek(self) -> QueueEntry:
        if self.empty():
            return None
        bi, q, tau, k = self.state
        return QueueEntry(q + 1, k, tau, self.blocks[bi][0])

    def pop(self) -> QueueEntry:
        e = self.peek()
        if e is None:
            raise IndexError("queue is empty")
        bi, q, tau, k = self.state
        if k > 0:
            self.state = (bi, q, tau, k - 1)
        else:
            cur = TupleCursor(self.blocks[bi][2], self.vs[q], start=tau)
            nxt = cur._successor(tau)
            if nxt is not None:
                self.state = (bi, q, nxt, self.alphas[q] - 1)
            else:
                self.state = self._next_q(bi, q)
        return e

    def cursor_state(self) -> str:
        if self.state is None:
            return "empty"
        if self.state[0] == "wait":
            return f"wait block={self.state[1]}"
        bi, q, tau, k = self.state
        return f"block={bi} q={q + 1} tau={'-'.join(str(t + 1) for t in tau)} k={k}"


# ---------------------------------------------------------------- trace

@dataclass
class LedgerEntry:
    entry: QueueEntry
    f: object
    blocks: tuple               # stage-j0 cubes B_tau(i)
    cert_label: str
    cert_source: str
    bound: Fraction             # certified lower bound of |D_k f_q| on kept products (None: none claimed)
    attained: Fraction          # smallest certified value over kept products
    case_counts: dict
    stage: int
    status: str = "certified"

    def label(self) -> str:
        return self.entry.label()

    def survivor_sets(self, E: CubeSet):
        return [[c for c in E if B.contains(c)] for B in self.blocks]

    def line(self) -> str:
        cases = ",".join(f"{k}:{v[0]}" for k, v in sorted(self.case_counts.items()))
        return "\t".join([str(self.stage), str(self.entry.q), str(self.entry.k),
                          "-".join(str(t + 1) for t in self.entry.tau), str(self.entry.j0), self.status,
                          self.cert_label, self.cert_source, fmt_q(self.bound), fmt_q(self.attained), cases])


LEDGER_HEADER = "stage\tq\tk\ttau\tj0\tstatus\tderivative\tsource\tbound\tattained\tcases"


@dataclass
class Stage:
    index: int
    E: CubeSet
    N: int = None
    L: int = None
    eps: Fraction = None
    eps_star: Fraction = None
    entries: list = field(default_factory=list)
    cell_scale: int = None
    single_scale: int = None
    mid_scale: int = None
    count_bounds: dict = field(default_factory=dict)
    sizing: list = field(default_factory=list)
    notes: list = field(default_factory=list)


@dataclass
class ConstructionTrace:
    scenario: Scenario
    grid: Grid
    stages: list
    queue: EntryQueue
    mode: str = "paper"
    pending: list = field(default_factory=list)

    @property
    def final(self) -> CubeSet:
        return self.stages[-1].E

    def stage_set(self, j: int) -> CubeSet:
        return self.stages[j].E

    @property
    def ledger(self):
        return [e for st in self.stages for e in st.entries]

    def recorded_scales(self):
        out = set()
        for st in self.stages:
            out.add(st.E.scale)
            if st.mid_scale is not None:
                out.add(st.mid_scale)
        return sorted(out)


# ---------------------------------------------------------------- stage 0

def stage0_scale(sc: Scenario) -> int:
    """Smallest L0 >= s0 with r^-n(L0 - s0) >= v_1 + 1."""
    need = sc.functions[0].v + 1
    L0 = sc.base.scale
    while sc.grid.rinv ** (sc.n * (L0 - sc.base.scale)) < need:
        L0 += 1
    return L0


def init_stage0(sc: Scenario) -> ConstructionTrace:
    L0 = stage0_scale(sc)
    E0 = CubeSet(subdivide(sc.base, L0), L0, sc.grid, 0)
    assert len(E0) >= sc.functions[0].v + 1
    q = EntryQueue(sc.functions)
    q.add_block(0, 1, len(E0))
    st = Stage(0, E0, L=L0)
    return ConstructionTrace(sc, sc.grid, [st], q)


# ---------------------------------------------------------------- staged driver

def _current_targets(tr: ConstructionTrace, e: QueueEntry):
    Bs = [tr.stages[e.j0].E[i] for i in e.tau]
    cur = tr.final
    return Bs, [[c for c in cur if B.contains(c)] for B in Bs]


def _entry_certificate(tr, fs: FunctionSpec, e: QueueEntry, g, T, method):
    """Derivative certificate for D_k f along the chain pick chain[k]."""
    b, c = fs.chain[e.k]
    grid = tr.grid
    if e.k == fs.alpha - 1:
        cert = certify_derivative(g, T, method)
        source = "terminal"
    else:
        # the entry (q, k+1, tau, j0) was processed earlier; its bound holds on the current T's
        prev = [x for x in tr.ledger if x.entry == QueueEntry(e.q, e.k + 1, e.tau, e.j0)]
        if not prev or prev[-1].bound is None:
            raise CertificationFailure(f"no earlier guarantee for {e.label()}")
        base = certify_derivative(g, T, method)
        cval = prev[-1].bound
        C1 = cval if isinstance(base, Indeterminate) else max(base.C1, cval)
        val = None
        if grid.ultrametric:
            val = 0
            while grid.r ** val > cval:
                val += 1
            cval = grid.r ** val
        cert = DerivativeCertificate(b, c, cval, max(Fraction(1), C1), val)
        source = f"stage-{prev[-1].stage}"
    if isinstance(cert, Indeterminate):
        raise CertificationFailure(f"{e.label()}: {cert}")
    return cert, source


def _max_weight(tr) -> Fraction:
    from .measure import assign_measure
    m = assign_measure(tr)
    return max(m.stages[-1].values())


def size_level(tr, fs, e, pair, cert, T, eps, s, Lprev):
    """Smallest N passing the sizing rule; raises SizingCapExceeded naming the binding condition."""
    sc = tr.scenario
    grid = tr.grid
    n, r = grid.n, grid.r
    precision = getattr(sc.ring, "precision", None) if grid.ultrametric else None
    wmax = _max_weight(tr)
    log = []

    def conditions(N):
        out = []
        if not pair.in_J(N):
            return [("a-pair-level", False)]
        es = epsilon_star(pair, N, s, n, cert, grid.ultrametric, precision)
        ok_a = es is not None and eps < es
        if ok_a:
            scl = compute_scales(pair, N, eps, s, n, cert, grid.ultrametric)
            ok_a = all(ok for _, ok, _ in proposition_checks(pair, scl, cert, precision))
        out.append(("a-preconditions", ok_a))
        if not ok_a:
            return out
        L = scl.Ls
        # (b) enough cubes for every injection of the next block
        cells = sum(len(t) for t in T) * grid.rinv ** (n * (scl.sV - s))
        out.append(("b-cube-count", cells >= max(f.v for f in sc.functions) + 1))
        # (c) mass inequalities against the previous stage's largest weight
        estar = min(eps, es)
        cp = count_constant(scl, cert, r)
        lhs = wmax * Fraction(grid.rinv) ** (n * Lprev + n) / cp
        c1 = lhs <= rpow_lo(r, -n * estar * N)
        c2 = 2 * wmax * Fraction(grid.rinv) ** (n * Lprev) < rpow_lo(r, -n * eps * L)
        out.append(("c-measure", c1 and c2))
        # (d) trimming keeps at least half of the subcubes outside the T's
        out.append(("d-trimming", _trim_fraction(tr, T, L) >= Fraction(1, 2)))
        return out

    def passes(N):
        cs = conditions(N)
        log.append((N, cs))
        return all(ok for _, ok in cs)

    lo = max(1, ceil_frac(Fraction(s) / pair.sigma))
    N = lo
    last_fail = None
    while not passes(N):
        last_fail = N
        if N >= sc.cap:
            bad = [name for name, ok in log[-1][1] if not ok]
            raise SizingCapExceeded(f"no admissible level up to {sc.cap} for {e.label()}; failing: {bad}",
                                    binding=bad[0] if bad else None)
        N = min(2 * N, sc.cap)
    if last_fail is not None:
        a, b = last_fail, N
        while b - a > 1:
            mid = (a + b) // 2
            if passes(mid):
                b = mid
            else:
                a = mid
        N = b
    binding = None
    for Nf, cs in reversed(log):
        bad = [name for name, ok in cs if not ok]
        if bad:
            binding = bad[0]
            break
    return N, binding, log


def _trim_fraction(tr, T, L) -> Fraction:
    grid = tr.grid
    if grid.ultrametric:
        return Fraction(1)
    inT = {c for t in T for c in t}
    others = [c for c in tr.final if c not in inT]
    if not others:
        return Fraction(1)
    avoid = sorted(inT)
    kept = total = 0
    for c in others:
        ch = subdivide(c, L) if L - c.scale <= 4 else None
        if ch is None:
            return Fraction(1)   # border layers are a vanishing fraction this deep
        total += len(ch)
        kept += len(trim_border(ch, avoid))
    return Fraction(kept, total)


def run_stage(tr: ConstructionTrace) -> ConstructionTrace:
    sc = tr.scenario
    if tr.queue.empty():
        raise IndexError("queue is empty")
    j = len(tr.stages)
    e = tr.queue.peek()
    fs = sc.functions[e.q - 1]
    g = fs.derivative(e.k)
    Bs, T = _current_targets(tr, e)
    if any(not t for t in T):
        raise CertificationFailure(f"{e.label()}: a target set is empty")
    cert, source = _entry_certificate(tr, fs, e, g, T, sc.method)
    pair = sc.pair_for(fs, e.k)
    eps = sc.eps_for(j)
    prev = tr.final
    s = prev.scale
    st_notes = []
    if len(sc.levels) >= j:
        N = sc.levels[j - 1]
        binding, log = "override", []
        st_notes.append(f"level fixed by schedule override: N={N}")
    else:
        N, binding, log = size_level(tr, fs, e, pair, cert, T, eps, s, prev.scale)
    out = run_avoidance(AvoidanceInput(T, g, pair, eps, N, cert, sc.method))
    scl = out.scales
    L = scl.Ls
    inT = {c for t in T for c in t}
    cubes = [c for cs in out.survivors for c in cs]
    avoid = sorted(inT)
    for c in prev:
        if c in inT:
            continue
        ch = subdivide(c, L)
        cubes.extend(trim_border(ch, avoid))
    E = CubeSet(cubes, L, tr.grid, j)
    tr.queue.pop()
    bound = out.attained if tr.grid.ultrametric and out.attained is not None else out.bound
    led = LedgerEntry(e, g, tuple(Bs), out.cert.label(), source, out.bound, min(bound, out.min_lower),
                      out.case_counts, j)
    estar = min(eps, out.eps_star)
    st = Stage(j, E, N, L, eps, out.eps_star, [led], scl.sV, ceil_frac(pair.sigma * N),
               _mid_scale(pair.sigma, estar, N, s, L),
               _count_bounds(tr.grid, pair, scl, out.cert, [c for t in T for c in t]),
               sizing=[(N_, [(a, ok) for a, ok in cs]) for N_, cs in log], notes=st_notes + [f"binding={binding}"])
    tr.stages.append(st)
    tr.queue.add_block(j, j + 1, len(E))
    return tr


def _mid_scale(sigma, estar, N, s, L) -> int:
    t = floor_frac((sigma - 1000 * estar) * N)
    return min(max(t, s), L)


def _count_bounds(grid, pair, scl, cert, targets, strict=False):
    n, r, sigma = grid.n, grid.r, pair.sigma
    lo = count_constant(scl, cert, r) * rpow_lo(r, -n * (sigma - 5 * scl.eps) * scl.j)
    hi_exp = (sigma - 4 * scl.eps) * scl.j + (0 if strict else 1)
    hi = rpow_hi(r, -n * hi_exp)
    return {U: (lo, hi) for U in targets}


def build(sc: Scenario, stages: int = None) -> ConstructionTrace:
    stages = sc.stages if stages is None else stages
    tr = init_stage0(sc)
    for _ in range(stages):
        run_stage(tr)
    tr.pending = _pending(tr)
    return tr


def _pending(tr):
    out = []
    if not tr.queue.empty():
        out.append(tr.queue.cursor_state())
    return out


# ---------------------------------------------------------------- uniform-depth driver

class _UltraTupleEval:
    """Valuations of f over products of landmark lists, optionally with digit offsets."""

    def __init__(self, f, grid):
        self.f = f
        self.grid = grid
        ctx = grid.ring
        self.ctx = ctx
        self.P = ctx.precision
        self.linear = None
        if isinstance(ctx, FqContext) and ctx.prime_field and f.degree <= 1 and \
                all(not any(c.coeffs[1:]) for e, c in f.terms.items() if sum(e) == 1):
            a = np.zeros(f.nvars, dtype=np.int64)
            for e, c in f.terms.items():
                if sum(e) == 1:
                    a[e.index(1)] = c.coeffs[0] if c.coeffs else 0
            a0 = np.zeros(self.P, dtype=np.int64)
            c0 = f.constant_term()
            for i, d in enumerate(c0.coeffs[: self.P]):
                a0[i] = d
            self.linear = (a, a0)
        self.vals = UltraValuations(f)

    def digits(self, ys):
        """(len(ys), n, P) digit array of landmark tuples."""
        P = self.P
        arr = np.zeros((len(ys), self.grid.n, P), dtype=np.int64)
        for i, y in enumerate(ys):
            for k, x in enumerate(y):
                c = x.coeffs[:P]
                arr[i, k, :len(c)] = c
        return arr

    def _linear_vals(self, arrs):
        """arrs: per block arrays broadcastable to (..., n, P)."""
        a, a0 = self.linear
        p = self.ctx.p
        n = self.grid.n
        tot = None
        for b, A in enumerate(arrs):
            for k in range(n):
                coef = int(a[b * n + k])
                if coef:
                    t = coef * A[..., k, :]
                    tot = t if tot is None else tot + t
        if tot is None:
            tot = np.zeros(arrs[0].shape[:-2] + (self.P,), dtype=np.int64)
        tot = (tot + a0) % p
        nz = tot != 0
        first = np.argmax(nz, axis=-1)
        return np.where(nz.any(axis=-1), first, self.P)

    def product_vals(self, Ylists):
        """Valuation array of shape (|Y_1|, ..., |Y_v|)."""
        v = len(Ylists)
        if self.linear is not None:
            arrs = []
            for b, ys in enumerate(Ylists):
                A = self.digits(ys)
                shape = [1] * v + [self.grid.n, self.P]
                shape[b] = len(ys)
                arrs.append(A.reshape(shape))
            return self._linear_vals(arrs)
        pts = [tuple(x for y in t for x in y) for t in product(*Ylists)]
        return np.asarray(self.vals(pts)).reshape([len(ys) for ys in Ylists])

    def shifted_vals(self, Ylists, tuples, offsets, L):
        """(C, |O|^v) valuations at y + offset t^L for every constraint tuple and offset combination."""
        v = len(Ylists)
        combos = list(product(range(len(offsets)), repeat=v))
        if self.linear is not None:
            arrs = []
            q = self.ctx.q
            for b, ys in enumerate(Ylists):
                A = self.digits(ys)                    # (nY, n, P)
                idx = tuples[:, b]
                base = A[idx]                          # (C, n, P)
                off = np.array([offsets[c[b]] for c in combos], dtype=np.int64)  # (K, n)
                S = np.repeat(base[:, None, :, :], len(combos), axis=1)         # (C, K, n, P)
                S[:, :, :, L] = (S[:, :, :, L] + off[None, :, :]) % q
                arrs.append(S)
            return self._linear_vals(arrs)
        grid = self.grid
        pts = []
        for t in tuples:
            for c in combos:
                ys = []
                for b in range(v):
                    y = Ylists[b][t[b]]
                    ys.extend(_shift_ultra(grid, y, offsets[c[b]], L))
                pts.append(tuple(ys))
        return np.asarray(self.vals(pts)).reshape(len(tuples), len(combos))


def _shift_ultra(grid, y, off, L):
    ring = grid.ring
    return tuple(x + ring.digit_monomial(u, L) if u else x for x, u in zip(y, off))


def build_uniform(sc: Scenario, N: int = None) -> ConstructionTrace:
    """Every stage-0 entry of function 1 at one shared level N (desk-scale surrogate)."""
    N = sc.uniform_depth if N is None else N
    if len(sc.functions) != 1:
        raise ConfigError("uniform-depth mode handles a single function")
    tr = init_stage0(sc)
    tr.mode = "uniform"
    fs = sc.functions[0]
    f = fs.poly
    v = fs.v
    grid = tr.grid
    n, r, ultra = grid.n, grid.r, grid.ultrametric
    E0 = tr.stages[0].E
    s = E0.scale
    M = len(E0)
    pair = sc.pair_for(fs, 0)
    sysm = pair.system
    eps = sc.eps_for(1)
    check_domain(sysm, [E0.cubes])
    if not pair.in_J(N):
        raise PairLevelUnusable(f"level {N} is not in the pair's index set")
    precision = getattr(sc.ring, "precision", None) if ultra else None

    taus = list(TupleCursor(M, v))
    certs = {t: certify_derivative(f, [[E0[i]] for i in t], sc.method) for t in taus}
    good = {t: c for t, c in certs.items() if isinstance(c, DerivativeCertificate)}
    nominal = DerivativeCertificate(0, 0, Fraction(1), Fraction(1), 0 if ultra else None)
    worst = min(good.values(), key=lambda c: (c.c, -c.C1)) if good else nominal
    base = compute_scales(pair, N, eps, s, n, worst, ultra)
    ms = [_cstar_exponent(r, c.c, c.C1, n, ultra) for c in good.values()]

    # landmarks per stage-0 cube (independent of the survivor depth)
    Y = [select_landmarks(sysm, U, base) for U in E0]
    if len(good) < len(taus):
        if ultra:
            ms.append(1)
        else:
            ms.append(sc.survivor_margin if sc.survivor_margin is not None
                      else _real_margin(f, grid, E0, Y, base, v, sc.method))
    m = max(ms)
    scl = replace(base, m=m, Ls=base.L + m)
    checks = proposition_checks(pair, scl, worst, precision)
    bad = [c for c in checks if not c[1]]
    if bad:
        raise PairLevelUnusable(f"inequalities fail at level {N}: {bad}")
    estars = [epsilon_star(pair, N, s, n, c, ultra, precision) for c in (good.values() or [nominal])]
    if any(e is None for e in estars) or not eps < min(estars):
        raise PairLevelUnusable(f"eps={eps} is not below eps* at level {N}")
    eps_star = min(estars)
    err = pair.witness_error(N)
    for c in good.values():
        if err > c.c / 8 * rpow_lo(r, scl.E):
            raise PairLevelUnusable(f"witness error {err} exceeds (c/8) r^E at level {N}")

    var_of = {}
    for u, blk in enumerate(Y):
        for i in range(len(blk)):
            var_of[(u, i)] = len(var_of)
    if ultra:
        offsets = list(product(range(grid.rinv), repeat=n))
    else:
        h = shift_steps(scl, r)
        offsets = list(product((0, h), repeat=n))
    D = len(offsets)
    csp = OffsetCSP(len(var_of), D)
    per_tau = {}
    ev = _UltraTupleEval(f, grid) if ultra else None
    for t in taus:
        cert = good.get(t)
        if ultra:
            info = _classify_ultra(f, grid, scl, cert, t, E0, Y, ev, offsets)
        else:
            info = _classify_real(f, grid, scl, cert, t, Y, offsets, sc.method)
        per_tau[t] = info
        for tup, allowed in info["constraints"]:
            vars_ = [var_of[(t[b], tup[b])] for b in range(v)]
            csp.add(vars_, allowed)
    sol = csp.solve()
    if sol is None:
        raise CertificationFailure("no offset assignment certifies every cube tuple")

    cubes = []
    owner = {}
    for (u, i), x in var_of.items():
        V, y = Y[u][i]
        c = survivor_cube(grid, y, offsets[sol[x]], scl)
        cubes.append(c)
        owner[c] = (u, i)
    E1 = CubeSet(cubes, scl.Ls, grid, 1)

    entries = []
    for t in taus:
        info = per_tau[t]
        cert = good.get(t)
        cases = dict(info["cases"])
        low = info["case1_low"]
        worst_val = None
        for tup, allowed in info["constraints"]:
            combo = tuple(sol[var_of[(t[b], tup[b])]] for b in range(v))
            val = info["value"](tup, combo)
            worst_val = val if worst_val is None else min(worst_val, val)
        if info["constraints"]:
            cases["shifted"] = (len(info["constraints"]), worst_val)
        lows = [x for x in (low, worst_val) if x is not None]
        attained = min(lows) if lows else None
        bound = bound_constant(scl, cert, r)[0] if cert is not None else attained
        label = cert.label() if cert is not None else "none"
        source = "enclosure" if cert is not None else "direct"
        entries.append(LedgerEntry(QueueEntry(1, 0, t, 0), f, tuple(E0[i] for i in t), label, source,
                                   bound, attained, cases, 1))
    estar = min(eps, eps_star)
    st = Stage(1, E1, N, scl.Ls, eps, eps_star, entries, scl.sV, ceil_frac(pair.sigma * N),
               _mid_scale(pair.sigma, estar, N, s, scl.Ls),
               _count_bounds(grid, pair, scl, worst, list(E0)),
               notes=["uniform-depth surrogate: all stage-0 entries at one shared level",
                      f"derivative certificates: {len(good)} of {len(taus)} tuples",
                      f"offsets: {D} values per cell, survivor margin m={m}"])
    st.checks = checks
    tr.stages.append(st)
    # only k = 0 entries of the first block are processed here
    tr.pending = [f"q=1 k={k} (all tau)" for k in range(1, fs.alpha)]
    return tr


def _classify_ultra(f, grid, scl, cert, t, E0, Y, ev, offsets):
    """Split landmark tuples of one injection into settled ones and offset constraints."""
    r = grid.r
    v = len(t)
    if cert is not None:
        cz = ProductCertifier(f, grid, cert, scl)
        v_case1, v_bound = cz.v_case1, cz.v_bound
    else:
        # no derivative bound: f is constant on a ball product once |f| > r^radius
        v_case1, v_bound = scl.L - 1, scl.Ls - 1
    Ylists = [[y for _, y in Y[u]] for u in t]
    sizes = [len(ys) for ys in Ylists]
    total = int(np.prod(sizes))
    centers, scales = [], []
    for u in t:
        centers.extend(E0[u].center_elements(grid.ring))
        scales.extend([E0[u].scale] * grid.n)
    enc = enclose_ultra(f, centers, scales)
    info = {"cases": {}, "constraints": [], "case1_low": None}
    if enc.exact and enc.valuation <= v_case1:
        info["cases"]["case1"] = (total, r ** enc.valuation)
        info["case1_low"] = r ** enc.valuation
        info["value"] = None
        return info
    vals = ev.product_vals(Ylists)
    c1 = vals <= v_case1
    if c1.any():
        low = r ** int(vals[c1].max())
        info["cases"]["case1"] = (int(c1.sum()), low)
        info["case1_low"] = low
    rest = np.argwhere(~c1)
    if len(rest):
        sv = ev.shifted_vals(Ylists, rest, offsets, scl.L)
        codes = [encode(c, len(offsets)) for c in product(range(len(offsets)), repeat=v)]
        table = {}
        for row, tup in enumerate(rest):
            tup = tuple(int(x) for x in tup)
            ok = sv[row] <= v_bound
            allowed = [codes[k] for k in np.nonzero(ok)[0]]
            info["constraints"].append((tup, allowed))
            table[tup] = {codes[k]: int(sv[row, k]) for k in np.nonzero(ok)[0]}
        D = len(offsets)
        info["value"] = lambda tup, combo, table=table, D=D: r ** table[tup][encode(combo, D)]
    return info


def _classify_real(f, grid, scl, cert, t, Y, offsets, method):
    r = grid.r
    v = len(t)
    Ylists = [[y for _, y in Y[u]] for u in t]
    info = {"cases": {}, "constraints": [], "case1_low": None}
    if cert is not None:
        cz = ProductCertifier(f, grid, cert, scl, method)
        thr1 = cz.case1_threshold
    else:
        cz = None
        thr1 = None
    side0 = r ** scl.L0
    side = r ** scl.Ls
    D = len(offsets)
    table = {}
    cnt1, low1 = 0, None
    for tup in product(*[range(len(ys)) for ys in Ylists]):
        ys = [Ylists[b][tup[b]] for b in range(v)]
        box = [Interval(x, x + side0) for y in ys for x in y]
        lo = enclose_real(f, box, method=method).mig()
        if (thr1 is not None and lo >= thr1) or (thr1 is None and lo > 0):
            cnt1 += 1
            low1 = lo if low1 is None else min(low1, lo)
            continue
        allowed, vals = [], {}
        for combo in product(range(D), repeat=v):
            offs = [offsets[c] for c in combo]
            if cz is not None:
                case, low = cz.real_kept(ys, offs, (cert.block, cert.coord))
                ok = case is not None
            else:
                stars = [shifted_point(grid, y, o, scl) for y, o in zip(ys, offs)]
                low = enclose_real(f, [Interval(x, x + side) for y in stars for x in y], method=method).mig()
                ok = low > 0
            if ok:
                code = encode(combo, D)
                allowed.append(code)
                vals[code] = low
        info["constraints"].append((tup, allowed))
        table[tup] = vals
    if cnt1:
        info["cases"]["case1"] = (cnt1, low1)
        info["case1_low"] = low1
    info["value"] = lambda tup, combo: table[tup][encode(combo, D)]
    return info


def _real_margin(f, grid, E0, Y, scl, v, method) -> int:
    """Survivor depth below L when no derivative bound exists.

    Smallest m >= 1 with G r^(L+m) <= min |f(y)| / 4 over landmark tuples
    from distinct stage-0 cubes, G an l1 gradient bound over B^v.
    """
    n = grid.n
    lo = [min(c.intervals()[i].lo for c in E0) for i in range(n)]
    hi = [max(c.intervals()[i].hi for c in E0) for i in range(n)]
    box = [Interval(a, b) for _ in range(v) for a, b in zip(lo, hi)]
    G = sum(enclose_real(f.partial(b, k), box, method=method).mag() for b in range(v) for k in range(n))
    fmin = None
    for t in TupleCursor(len(E0), v):
        for ys in product(*[[y for _, y in Y[u]] for u in t]):
            a = abs_upper(f.eval([x for y in ys for x in y]))
            if a > 0 and (fmin is None or a < fmin):
                fmin = a
    if fmin is None:
        return 1
    m = 1
    while G * grid.r ** (scl.L + m) > fmin / 4:
        m += 1
    return m


# ---------------------------------------------------------------- export

def build_any(sc: Scenario, stages: int = None, uniform_depth: int = None) -> ConstructionTrace:
    if uniform_depth is not None or (sc.mode == "uniform" and stages is None):
        return build_uniform(sc, uniform_depth)
    return build(sc, stages)


def stage_summary(tr: ConstructionTrace) -> str:
    lines = ["stage\tscale\tcount\tN\teps\teps_star\tcell_scale\tsingle_scale\tmid_scale"]
    for st in tr.stages:
        lines.append("\t".join(str(x) for x in (
            st.index, st.E.scale, len(st.E), st.N if st.N is not None else "-",
            st.eps if st.eps is not None else "-", st.eps_star if st.eps_star is not None else "-",
            st.cell_scale if st.cell_scale is not None else "-",
            st.single_scale if st.single_scale is not None else "-",
            st.mid_scale if st.mid_scale is not None else "-")))
    return "\n".join(lines) + "\n"


def ledger_text(tr: ConstructionTrace) -> str:
    lines = [LEDGER_HEADER] + [e.line() for e in tr.ledger]
    for p in tr.pending:
        lines.append(f"# pending\t{p}")
    return "\n".join(lines) + "\n"


def export_trace(tr: ConstructionTrace, out_dir: str):
    """Per-stage cube files, the ledger, and a stage summary (fixed names)."""
    os.makedirs(out_dir, exist_ok=True)
    written = []
    for st in tr.stages:
        name = os.path.join(out_dir, f"stage_{st.index:03d}.cubes")
        _write(name, st.E.serialize())
        written.append(name)
    _write(os.path.join(out_dir, "ledger.tsv"), ledger_text(tr))
    _write(os.path.join(out_dir, "stages.tsv"), stage_summary(tr))
    notes = [f"mode={tr.mode}", f"scenario={tr.scenario.name}"]
    for st in tr.stages:
        for nt in st.notes:
            notes.append(f"stage {st.index}: {nt}")
        for name, ok, detail in getattr(st, "checks", []):
            notes.append(f"stage {st.index}: check {name} {'pass' if ok else 'fail'} {detail}")
    _write(os.path.join(out_dir, "notes.txt"), "\n".join(notes) + "\n")
    return written


def _write(path, text):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
