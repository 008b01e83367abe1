"""Independent oracles: solution search over cube products, AP-freeness, trace re-checks."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

from .arith.enclose import enclose_real, enclose_ultra
from .arith.rings import serialize_element
from .geometry import Cube, CubeSet, subdivide
from .powers import fmt_q


@dataclass
class SolutionSearchConfig:
    mode: str = "interval"          # grid | interval | exhaustive
    resolution: int = None          # sample scale (grid) / representative precision (exhaustive)
    threshold: Fraction = Fraction(0)
    depth_cap: int = 8
    groups: object = None           # callable cube -> group key; components must use distinct groups
    method: str = "tight"
    max_witnesses: int = 1000


@dataclass
class SearchResult:
    status: str                     # certified-empty | witnesses | unknown
    bound: Fraction = None          # proven lower bound of |f| (certified-empty)
    witnesses: list = field(default_factory=list)
    min_abs: Fraction = None        # smallest sampled |f| (grid / exhaustive)
    checked: int = 0
    unknown: list = field(default_factory=list)
    sign_change: list = field(default_factory=list)   # real: cube tuples where sampled f takes both signs

    @property
    def certified_empty(self) -> bool:
        return self.status == "certified-empty"

    def witness_lines(self):
        return ["\t".join(" ".join(serialize_element(x) for x in pt) for pt in w) for w in self.witnesses]


def _cube_tuples(sets, groups):
    lists = [list(s) for s in sets]
    for t in product(*lists):
        if groups is not None:
            keys = [groups(c) for c in t]
            if len(set(keys)) < len(keys):
                continue
        elif len(set(t)) < len(t):
            continue
        yield t


def search_solutions(f, sets, cfg: SolutionSearchConfig = None) -> SearchResult:
    """Look for zeros of f on products of cubes, one cube set per block."""
    cfg = cfg or SolutionSearchConfig()
    sets = list(sets)
    if len(sets) != f.v:
        raise ValueError(f"expected {f.v} cube sets, got {len(sets)}")
    grid = next(iter(sets[0])).grid
    if cfg.mode == "grid":
        return _grid_search(f, sets, cfg, grid)
    if cfg.mode == "interval":
        return _interval_search(f, sets, cfg, grid)
    if cfg.mode == "exhaustive":
        if not grid.ultrametric:
            raise ValueError("exhaustive mode needs a precision-bounded local ring")
        return _exhaustive_search(f, sets, cfg, grid)
    raise ValueError(f"unknown search mode {cfg.mode!r}")


# ---------------------------------------------------------------- grid sampling

def _sample_points(c: Cube, res: int):
    """Sample points of a cube: closed real grid at scale res, or ball representatives."""
    g = c.grid
    if res < c.scale:
        raise ValueError("resolution is coarser than the cube")
    if g.ultrametric:
        return [tuple(g.ring.from_code(x, res) for x in sub.coords) for sub in subdivide(c, res)]
    k = g.rinv ** (res - c.scale)
    h = g.r ** res
    axes = [[(x * k + d) * h for d in range(k + 1)] for x in c.coords]
    return list(product(*axes))


def _abs_value(val, grid):
    if grid.ultrametric:
        return grid.ring.abs_value(val)
    from .avoidance import abs_upper
    return abs_upper(val)


def _grid_search(f, sets, cfg, grid):
    res = cfg.resolution if cfg.resolution is not None else max(c.scale for s in sets for c in s)
    cache = {}

    def pts(c):
        if c not in cache:
            cache[c] = _sample_points(c, res)
        return cache[c]

    out = SearchResult("witnesses")
    best = None
    for t in _cube_tuples(sets, cfg.groups):
        signs = set()
        for combo in product(*[pts(c) for c in t]):
            flat = [x for pt in combo for x in pt]
            val = f.eval(flat)
            a = _abs_value(val, grid)
            if not grid.ultrametric and not isinstance(val, (int, Fraction)):
                iv = val.interval()
                signs.add(1 if iv.lo > 0 else -1 if iv.hi < 0 else 0)
            elif not grid.ultrametric:
                signs.add((val > 0) - (val < 0))
            out.checked += 1
            if best is None or a < best:
                best = a
            if a <= cfg.threshold and len(out.witnesses) < cfg.max_witnesses:
                out.witnesses.append(combo)
        if -1 in signs and 1 in signs:
            # the product of cubes is convex, so f vanishes somewhere on it
            out.sign_change.append(t)
    out.min_abs = best
    if not out.witnesses:
        out.status = "no-witness"
    return out


# ---------------------------------------------------------------- interval certification

def _enclose_product(f, cubes, grid, method):
    if grid.ultrametric:
        centers, scales = [], []
        for c in cubes:
            centers.extend(c.center_elements(grid.ring))
            scales.extend([c.scale] * grid.n)
        enc = enclose_ultra(f, centers, scales)
        return enc.abs_lower(grid.r)
    box = [iv for c in cubes for iv in c.intervals()]
    return enclose_real(f, box, method=method).mig()


def _interval_search(f, sets, cfg, grid):
    out = SearchResult("certified-empty")
    bound = None
    for t in _cube_tuples(sets, cfg.groups):
        stack = [(tuple(t), 0)]
        while stack:
            cubes, depth = stack.pop()
            out.checked += 1
            low = _enclose_product(f, cubes, grid, cfg.method)
            if low > 0:
                bound = low if bound is None else min(bound, low)
                continue
            if depth >= cfg.depth_cap:
                out.unknown.append(cubes)
                continue
            # bisect the block whose cube is coarsest
            k = min(range(len(cubes)), key=lambda i: (cubes[i].scale, i))
            for ch in subdivide(cubes[k], cubes[k].scale + 1):
                nxt = list(cubes)
                nxt[k] = ch
                stack.append((tuple(nxt), depth + 1))
    if out.unknown:
        out.status = "unknown"
    out.bound = bound
    return out


# ---------------------------------------------------------------- exhaustive (local fields)

def _exhaustive_search(f, sets, cfg, grid):
    from .avoidance import UltraValuations

    ring = grid.ring
    P = ring.precision
    res = cfg.resolution if cfg.resolution is not None else P
    vals = UltraValuations(f)
    out = SearchResult("certified-empty")
    reps = {}

    def rep(c):
        if c not in reps:
            reps[c] = _sample_points(c, res)
        return reps[c]

    worst = None
    batch, meta = [], []

    def flush():
        nonlocal worst
        if not batch:
            return
        vs = vals(batch)
        for v, pt in zip(vs, meta):
            v = int(v)
            if v >= P and len(out.witnesses) < cfg.max_witnesses:
                out.witnesses.append(pt)
            worst = v if worst is None else max(worst, v)
        batch.clear()
        meta.clear()

    for t in _cube_tuples(sets, cfg.groups):
        for combo in product(*[rep(c) for c in t]):
            batch.append(tuple(x for pt in combo for x in pt))
            meta.append(combo)
            out.checked += 1
            if len(batch) >= 50000:
                flush()
    flush()
    if worst is not None:
        out.min_abs = Fraction(0) if worst >= P else grid.r ** worst
    if out.witnesses:
        out.status = "witnesses"
    else:
        out.bound = out.min_abs
    return out


# ---------------------------------------------------------------- arithmetic progressions

def element_key(x):
    if isinstance(x, (int, Fraction)):
        return ("q", Fraction(x))
    if hasattr(x, "coeffs"):
        return ("s", tuple(x.coeffs))
    if hasattr(x, "value"):
        return ("p", x.value)
    return ("o", serialize_element(x))


def _vec_key(v):
    return tuple(element_key(x) for x in v)


def check_ap_free(points, groups=None):
    """(True, None) iff no distinct x, y, z with x - 2y + z = 0.

    Points are vectors (tuples) of ring elements or rationals.  Each pair
    {x, z} is looked up against the table of doubled points 2y.  With
    ``groups`` (one key per point), the three points must also come from
    three distinct groups.
    """
    pts = [tuple(p) if isinstance(p, (tuple, list)) else (p,) for p in points]
    uniq, gkeys, seen = [], [], set()
    for i, p in enumerate(pts):
        k = _vec_key(p)
        if k in seen:
            continue
        seen.add(k)
        uniq.append(p)
        gkeys.append(None if groups is None else groups[i])
    doubled = {}
    for i, p in enumerate(uniq):
        doubled.setdefault(_vec_key(tuple(x + x for x in p)), []).append(i)
    for a in range(len(uniq)):
        x = uniq[a]
        for b in range(a + 1, len(uniq)):
            z = uniq[b]
            hits = doubled.get(_vec_key(tuple(u + w for u, w in zip(x, z))))
            if not hits:
                continue
            for i in hits:
                if i in (a, b):
                    continue
                if groups is not None and len({gkeys[a], gkeys[i], gkeys[b]}) < 3:
                    continue
                return False, (x, uniq[i], z)
    return True, None


# ---------------------------------------------------------------- trace cross-validation

@dataclass
class ValidationRow:
    check: str
    subject: str
    status: str
    detail: str

    def line(self) -> str:
        return f"{self.check}\t{self.subject}\t{self.status}\t{self.detail}"


@dataclass
class ValidationReport:
    rows: list = field(default_factory=list)

    def add(self, check, subject, ok, detail=""):
        self.rows.append(ValidationRow(check, subject, "pass" if ok else "fail", detail))

    @property
    def passed(self) -> bool:
        return all(r.status == "pass" for r in self.rows)

    def failures(self):
        return [r for r in self.rows if r.status != "pass"]

    def to_tsv(self) -> str:
        return "check\tsubject\tstatus\tdetail\n" + "".join(r.line() + "\n" for r in self.rows)


def cross_validate(tr, oracle: str = "auto", workers: int = 1) -> ValidationReport:
    """Re-derive every stage's claims from the raw cube sets.

    Per certified ledger entry: an independent solution search over the
    survivors in its cube tuple, and the recorded lower bound recomputed.
    Per stage: nesting, survivor counts per partition cell, and the
    single-intersection property.  Entry checks run in ``workers``
    processes; rows keep the ledger order either way.
    """
    rep = ValidationReport()
    grid = tr.grid
    for st in tr.stages[1:]:
        prev = tr.stage_set(st.index - 1)
        cur = st.E
        ok = all(any(p.contains(c) if grid.ultrametric else _inside(p, c) for p in _parents(prev, c)) for c in cur)
        rep.add("nesting", f"stage {st.index}", ok, f"{len(cur)} cubes at scale {cur.scale}")
        _check_counts(rep, tr, st)
        _check_single_intersection(rep, tr, st)
        jobs = []
        for entry in st.entries:
            sets = [CubeSet(s, st.E.scale, grid) for s in entry.survivor_sets(st.E)]
            jobs.append((entry.f, sets, grid, entry.bound, f"stage {st.index} {entry.label()}", oracle))
        if workers > 1 and len(jobs) > 1:
            from concurrent.futures import ProcessPoolExecutor

            with ProcessPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(_entry_rows, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
        else:
            results = [_entry_rows(j) for j in jobs]
        for rows in results:
            rep.rows.extend(rows)
    return rep


def _inside(p: Cube, c: Cube) -> bool:
    return c.ancestor(p.scale) == p


def _parents(prev: CubeSet, c: Cube):
    a = c.ancestor(prev.scale)
    return [a] if a in set(prev.cubes) else []


def _check_counts(rep, tr, st):
    """Each partition cell keeps exactly one survivor; totals within the count bounds."""
    cur = st.E
    if st.cell_scale is None:
        return
    per = {}
    for c in cur:
        per.setdefault(c.ancestor(st.cell_scale), 0)
        per[c.ancestor(st.cell_scale)] += 1
    over = [k for k, v in per.items() if v != 1]
    rep.add("cell-count", f"stage {st.index}", not over,
            f"{len(per)} cells, {len(over)} with a survivor count other than 1")
    for U, (lo, hi) in st.count_bounds.items():
        got = sum(1 for c in cur if U.contains(c))
        rep.add("count-bound", f"stage {st.index} {U.coords}@{U.scale}", lo <= got <= hi,
                f"{got} in [{fmt_q(lo)}, {fmt_q(hi)}]")


def _check_single_intersection(rep, tr, st):
    """Every grid cube at scale ceil(sigma N) holds at most one survivor.

    Real cubes are compared by interiors (ancestor cells); closed survivor
    cubes of neighbouring cells may share boundary points.
    """
    if st.single_scale is None:
        return
    per = {}
    for c in st.E:
        k = c.ancestor(min(st.single_scale, c.scale))
        per[k] = per.get(k, 0) + 1
    bad = sum(1 for v in per.values() if v > 1)
    rep.add("single-intersection", f"stage {st.index}", bad == 0, f"scale {st.single_scale}, {bad} shared cells")


def _entry_rows(job):
    f, sets, grid, bound, subj, oracle = job
    out = ValidationReport()
    if any(len(s) == 0 for s in sets):
        out.add("avoidance", subj, False, "empty survivor set")
        return out.rows
    mode = oracle
    if mode == "auto":
        mode = "exhaustive" if grid.ultrametric else "interval"
    res = search_solutions(f, sets, SolutionSearchConfig(mode=mode))
    out.add("avoidance", subj, res.certified_empty,
            f"{res.status} checked={res.checked} bound={fmt_q(res.bound)}")
    if bound is None:
        return out.rows
    if not res.certified_empty:
        low = Fraction(0)
    elif grid.ultrametric:
        low = res.bound
    else:
        low = _min_direct(f, sets, grid)
    out.add("lower-bound", subj, low >= bound, f"recomputed {fmt_q(low)} vs certified {fmt_q(bound)}")
    return out.rows


def with_final_set(tr, cubes):
    """Shallow copy of a trace whose last stage holds ``cubes`` instead (fault injection)."""
    import copy

    out = copy.copy(tr)
    out.stages = list(tr.stages)
    st = copy.copy(tr.stages[-1])
    st.E = CubeSet(cubes, tr.stages[-1].E.scale, tr.grid, st.index)
    out.stages[-1] = st
    return out


def _min_direct(f, sets, grid):
    best = None
    for t in product(*[list(s) for s in sets]):
        low = _enclose_product(f, t, grid, "tight")
        best = low if best is None else min(best, low)
    return best
