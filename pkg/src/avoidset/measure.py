"""Mass distribution on the finite-depth set, Frostman audit, box counting."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import AvoidsetError
from .geometry import CubeSet
from .powers import fmt_q, rpow_lo


class TraceInconsistent(AvoidsetError):
    pass


@dataclass
class MeasureAssignment:
    """stages[j]: cube -> exact weight of the stage-j cube."""

    stages: list
    renormalized: list = field(default_factory=list)

    def final(self) -> dict:
        return self.stages[-1]

    def total(self, j: int = -1) -> Fraction:
        return sum(self.stages[j].values(), Fraction(0))

    def mass_at(self, scale: int) -> dict:
        """mu of every grid cube at ``scale`` (not finer than the final cubes)."""
        fin = self.final()
        s = next(iter(fin)).scale
        if scale > s:
            raise ValueError("scale is finer than the final cubes")
        out = {}
        for c, w in fin.items():
            a = c.ancestor(scale)
            out[a] = out.get(a, Fraction(0)) + w
        return out

    def serialize(self) -> str:
        lines = ["stage\tcube\tweight"]
        for j, ws in enumerate(self.stages):
            for c in sorted(ws):
                lines.append(f"{j}\t{' '.join(str(x) for x in c.coords)}@{c.scale}\t{ws[c]}")
        return "\n".join(lines) + "\n"


def split_evenly(parent_weight: Fraction, children, mid_scale: int):
    """Two-level even split: first over occupied intermediate cubes, then within each."""
    groups = {}
    for c in children:
        groups.setdefault(c.ancestor(mid_scale), []).append(c)
    out = {}
    share = parent_weight / len(groups)
    for g in sorted(groups):
        kids = groups[g]
        for c in kids:
            out[c] = share / len(kids)
    return out


def assign_measure(tr) -> MeasureAssignment:
    E0 = tr.stages[0].E
    w0 = {c: Fraction(1, len(E0)) for c in E0}
    stages = [w0]
    ren = []
    for st in tr.stages[1:]:
        prev = stages[-1]
        pscale = next(iter(prev)).scale
        kids = {}
        for c in st.E:
            a = c.ancestor(pscale)
            if a not in prev:
                raise TraceInconsistent(f"stage {st.index}: {c} has no parent cube")
            kids.setdefault(a, []).append(c)
        live = sum((w for p, w in prev.items() if p in kids), Fraction(0))
        total = sum(prev.values(), Fraction(0))
        if live != total:
            ren.append((st.index, total - live))
        mid = st.mid_scale if st.mid_scale is not None else pscale
        mid = min(max(mid, pscale), st.E.scale)
        cur = {}
        for p in sorted(kids):
            cur.update(split_evenly(prev[p] * total / live, kids[p], mid))
        stages.append(cur)
    return MeasureAssignment(stages, ren)


def recompute_from_counts(cubesets, mid_scales) -> dict:
    """Independent recomputation of the final weights from cube sets alone."""
    w = {c: Fraction(1, len(cubesets[0])) for c in cubesets[0]}
    for cs, mid in zip(cubesets[1:], mid_scales):
        pscale = next(iter(w)).scale
        per = {}
        for c in cs:
            per.setdefault(c.ancestor(pscale), {}).setdefault(c.ancestor(mid), []).append(c)
        live = sum(w[p] for p in per)
        nw = {}
        for p, groups in per.items():
            for g, kids in groups.items():
                for c in kids:
                    nw[c] = w[p] / live / len(groups) / len(kids)
        w = nw
    return w


# ---------------------------------------------------------------- Frostman audit

@dataclass
class FrostmanRow:
    scale: int
    regime: str
    cubes: int
    max_mass: Fraction
    constant: float          # max mu(I) / l(I)^(s - delta) at this scale
    exponent: float          # min log mu(I) / log l(I) at this scale
    status: str


@dataclass
class FrostmanReport:
    s: Fraction
    delta: Fraction
    C_max: float
    rows: list

    @property
    def C(self) -> float:
        return max(r.constant for r in self.rows)

    @property
    def passed(self) -> bool:
        return all(r.status == "pass" for r in self.rows)

    def violations(self):
        return [r for r in self.rows if r.status != "pass"]

    def to_tsv(self) -> str:
        lines = [f"# s={self.s} delta={fmt_q(self.delta)} C_max={self.C_max} worst_C={self.C:.6f}",
                 "scale\tregime\tcubes\tmax_mass\tconstant\texponent\tstatus"]
        for r in self.rows:
            lines.append(f"{r.scale}\t{r.regime}\t{r.cubes}\t{r.max_mass}\t{r.constant:.6f}\t{r.exponent:.6f}"
                         f"\t{r.status}")
        return "\n".join(lines) + "\n"


def _regime(tr, t: int) -> str:
    for st in tr.stages[1:]:
        prev = tr.stages[st.index - 1].E.scale
        if prev < t <= st.E.scale:
            mid = st.mid_scale if st.mid_scale is not None else prev
            return f"stage{st.index}-coarse" if t <= mid else f"stage{st.index}-fine"
    return "stage0"


def frostman_audit(m: MeasureAssignment, tr, s, delta, C_max: float = 10.0) -> FrostmanReport:
    """Check mu(I) <= C l(I)^(s - delta) for every grid cube I down to the final scale."""
    s, delta = Fraction(s), Fraction(delta)
    grid = tr.grid
    r = grid.r
    expo = s - delta
    rows = []
    fin_scale = tr.final.scale
    for t in range(tr.scenario.base.scale, fin_scale + 1):
        masses = m.mass_at(t)
        mx = max(masses.values())
        side = r ** t
        denom = rpow_lo(side, expo) if expo != 0 else Fraction(1)
        C = float(mx / denom)
        ex = min(math.log(float(w)) / math.log(float(side)) for w in masses.values()) if t > 0 else float("inf")
        rows.append(FrostmanRow(t, _regime(tr, t), len(masses), mx, C, ex, "pass" if C <= C_max else "fail"))
    return FrostmanReport(s, delta, C_max, rows)


def schedule_delta(tr) -> Fraction:
    """Exponent loss at stage 1: n sigma/(d gamma) - n(sigma - 6e*)/((d + e)(gamma + e*))."""
    sc = tr.scenario
    st = tr.stages[1]
    fs = sc.functions[0]
    pair = sc.pair_for(fs, 0)
    n = tr.grid.n
    d, sigma, gamma = Fraction(pair.degree), pair.sigma, pair.gamma
    e = st.eps
    es = min(st.eps, st.eps_star)
    return n * sigma / (d * gamma) - n * (sigma - 6 * es) / ((d + e) * (gamma + es))


def target_dimension(tr) -> Fraction:
    sc = tr.scenario
    pair = sc.pair_for(sc.functions[0], 0)
    return tr.grid.n * pair.sigma / (Fraction(pair.degree) * pair.gamma)


# ---------------------------------------------------------------- box counting

@dataclass
class DimensionReport:
    scales: list
    counts: list
    slope: float
    residual: float
    target: object = None
    rinv: int = 2

    def to_tsv(self) -> str:
        lines = [f"# slope={self.slope:.6f} residual={self.residual:.3e} target={self.target}",
                 "scale\tcount\tlog_inv_side\tlog_count"]
        for t, c, (x, y) in zip(self.scales, self.counts, self.points()):
            lines.append(f"{t}\t{c}\t{x:.6f}\t{y:.6f}")
        return "\n".join(lines) + "\n"

    def points(self):
        return [(t * math.log(self.rinv), math.log(c)) for t, c in zip(self.scales, self.counts)]


def box_dimension(obj, scales=None, target=None) -> DimensionReport:
    """Least-squares slope of log(covering count) against log(1/side).

    ``obj`` is a trace (its final set, coarsened to every scale between
    the base cube and the final scale) or a single CubeSet (coarsened to
    scales 1..its own scale unless ``scales`` is given).
    """
    if isinstance(obj, CubeSet):
        cs = obj
        lo = 1
    else:
        cs = obj.final
        lo = obj.stages[0].E.scale
        if target is None:
            try:
                target = target_dimension(obj)
            except Exception:
                target = None
    if scales is None:
        scales = list(range(lo, cs.scale + 1))
    if len(scales) < 2:
        raise ValueError("need at least two scales")
    counts = [len(cs.coarsen(t)) for t in scales]
    x = np.array([t * math.log(cs.grid.rinv) for t in scales])
    y = np.log(np.array(counts, dtype=float))
    A = np.vstack([x, np.ones_like(x)]).T
    coef, res, _, _ = np.linalg.lstsq(A, y, rcond=None)
    resid = float(np.sqrt(np.mean((A @ coef - y) ** 2)))
    return DimensionReport(list(scales), counts, float(coef[0]), resid, target, cs.grid.rinv)


# ---------------------------------------------------------------- capset limit

CAPSET_BASE = Fraction(2756, 1000)


def capset_table(tr, depths) -> list:
    """(depth, residue classes hit, log_3 count / depth, 2.756^depth) per depth."""
    fin = tr.final
    rows = []
    for d in depths:
        if d > fin.scale:
            raise ValueError(f"depth {d} exceeds the final scale {fin.scale}")
        cnt = len(fin.coarsen(d))
        ex = math.log(cnt) / (d * math.log(fin.grid.rinv)) if cnt > 0 else float("-inf")
        rows.append((d, cnt, ex, float(CAPSET_BASE) ** d))
    return rows


def capset_tsv(rows) -> str:
    lines = ["depth\tcount\texponent\treference"]
    for d, cnt, ex, ref in rows:
        lines.append(f"{d}\t{cnt}\t{ex:.6f}\t{ref:.6f}")
    return "\n".join(lines) + "\n"


def capset_trend_ok(rows) -> bool:
    """Exponent column nondecreasing, compared exactly: c_d^(1/d) <= c_e^(1/e) iff c_d^e <= c_e^d."""
    for (d, c, _, _), (e, c2, _, _) in zip(rows, rows[1:]):
        if c == 0 or c ** e > c2 ** d:
            return False
    return True
