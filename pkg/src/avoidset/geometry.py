"""Cube grids over R^n and K^n, subdivision, border trimming, tuple streams."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

from .arith.interval import Interval


@dataclass(frozen=True)
class Grid:
    """Scaled-integer grid: dimension n, ratio r = 1/rinv.

    In ultrametric grids a coordinate at scale s is the integer code of a
    digit prefix of length s (digit i weighted by rinv^i), so coordinates
    live in [0, rinv^s).
    """

    n: int
    rinv: int
    ultrametric: bool
    ring: object = field(default=None, compare=False, hash=False)

    @property
    def r(self) -> Fraction:
        return Fraction(1, self.rinv)

    def kind(self) -> str:
        return "ultrametric" if self.ultrametric else "real"


def real_grid(n: int, rinv: int = 2) -> Grid:
    return Grid(n, rinv, False)


def ultra_grid(n: int, ring) -> Grid:
    return Grid(n, ring.q, True, ring)


class Cube:
    __slots__ = ("coords", "scale", "grid")

    def __init__(self, coords, scale: int, grid: Grid):
        coords = tuple(int(c) for c in coords)
        if len(coords) != grid.n:
            raise ValueError("coordinate vector has wrong dimension")
        if grid.ultrametric:
            m = grid.rinv ** scale
            if any(not 0 <= c < m for c in coords):
                raise ValueError(f"digit prefix out of range at scale {scale}")
        self.coords = coords
        self.scale = scale
        self.grid = grid

    def key(self):
        return (self.scale, self.coords)

    def __eq__(self, other):
        return isinstance(other, Cube) and self.scale == other.scale and self.coords == other.coords

    def __lt__(self, other):
        return (self.scale, self.coords) < (other.scale, other.coords)

    def __hash__(self):
        return hash((self.scale, self.coords))

    def __repr__(self):
        return f"Cube({self.coords}, s={self.scale})"

    def side(self) -> Fraction:
        return self.grid.r ** self.scale

    # -- real view
    def intervals(self):
        h = self.side()
        return [Interval(c * h, (c + 1) * h) for c in self.coords]

    def lower_corner(self):
        h = self.side()
        return [c * h for c in self.coords]

    # -- ultrametric view
    def center_elements(self, ring=None):
        ring = ring or self.grid.ring
        return [ring.from_code(c, self.scale) for c in self.coords]

    # -- tree relations
    def ancestor(self, scale: int) -> "Cube":
        if scale > self.scale:
            raise ValueError("ancestor scale must be coarser")
        k = self.grid.rinv ** (self.scale - scale)
        if self.grid.ultrametric:
            m = self.grid.rinv ** scale
            return Cube([c % m for c in self.coords], scale, self.grid)
        return Cube([c // k for c in self.coords], scale, self.grid)

    def contains(self, other: "Cube") -> bool:
        return other.scale >= self.scale and other.ancestor(self.scale) == self


def subdivide(c: Cube, target_scale: int):
    if target_scale < c.scale:
        raise ValueError("target scale is coarser than the cube")
    g = c.grid
    k = g.rinv ** (target_scale - c.scale)
    if g.ultrametric:
        step = g.rinv ** c.scale
        axes = [[x + d * step for d in range(k)] for x in c.coords]
    else:
        axes = [[x * k + d for d in range(k)] for x in c.coords]
    return sorted(Cube(t, target_scale, g) for t in product(*axes))


def _touch_range(c: int, k: int):
    """Coarse cells [a, a+1] meeting the closed fine cell [c, c+1]/k."""
    lo = -((-c) // k) - 1
    hi = (c + 1) // k
    return range(lo, hi + 1)


def closed_intersects(a: Cube, b: Cube) -> bool:
    """Whether two real closed cubes share at least one point."""
    if a.scale > b.scale:
        a, b = b, a
    k = a.grid.rinv ** (b.scale - a.scale)
    return all(x * k - 1 <= y <= (x + 1) * k for x, y in zip(a.coords, b.coords))


def interiors_meet(a: Cube, b: Cube) -> bool:
    if a.grid.ultrametric:
        return a.contains(b) or b.contains(a)
    if a.scale > b.scale:
        a, b = b, a
    k = a.grid.rinv ** (b.scale - a.scale)
    return all(x * k <= y < (x + 1) * k for x, y in zip(a.coords, b.coords))


def trim_border(children, avoid):
    """Drop real children that share a boundary point with any cube of ``avoid``."""
    children = list(children)
    avoid = list(avoid)
    if not children or not avoid or children[0].grid.ultrametric:
        return children
    sc = children[0].scale
    bad = set()
    coarse = {}
    for a in avoid:
        if a.scale <= sc:
            coarse.setdefault(a.scale, set()).add(a.coords)
        else:
            k = a.grid.rinv ** (a.scale - sc)
            for t in product(*[_touch_range(x, k) for x in a.coords]):
                bad.add(t)
    out = []
    for ch in children:
        if ch.coords in bad:
            continue
        hit = False
        for sa, cells in coarse.items():
            k = ch.grid.rinv ** (sc - sa)
            for t in product(*[_touch_range(x, k) for x in ch.coords]):
                if t in cells:
                    hit = True
                    break
            if hit:
                break
        if not hit:
            out.append(ch)
    return out


class CubeSet:
    """Sorted duplicate-free cubes at a common scale."""

    def __init__(self, cubes, scale: int, grid: Grid, stage: int = 0):
        cs = sorted(set(cubes))
        for c in cs:
            if c.scale != scale:
                raise ValueError("all cubes of a CubeSet share one scale")
        self.cubes = tuple(cs)
        self.scale = scale
        self.grid = grid
        self.stage = stage

    def __len__(self):
        return len(self.cubes)

    def __iter__(self):
        return iter(self.cubes)

    def __getitem__(self, i):
        return self.cubes[i]

    def __eq__(self, other):
        return isinstance(other, CubeSet) and self.scale == other.scale and self.cubes == other.cubes

    def __repr__(self):
        return f"CubeSet(scale={self.scale}, count={len(self)})"

    def within(self, c: Cube) -> "CubeSet":
        return CubeSet([x for x in self.cubes if c.contains(x)], self.scale, self.grid, self.stage)

    def coarsen(self, scale: int) -> "CubeSet":
        """Cubes at a coarser scale meeting the set (covering cells)."""
        return CubeSet({c.ancestor(scale) for c in self.cubes}, scale, self.grid, self.stage)

    def refine(self, scale: int) -> "CubeSet":
        out = []
        for c in self.cubes:
            out.extend(subdivide(c, scale))
        return CubeSet(out, scale, self.grid, self.stage)

    def serialize(self) -> str:
        g = self.grid
        lines = [f"n={g.n} r=1/{g.rinv} scale={self.scale} count={len(self)} kind={g.kind()}"]
        lines.extend(" ".join(str(x) for x in c.coords) for c in self.cubes)
        return "\n".join(lines) + "\n"

    @classmethod
    def parse(cls, text: str, ring=None, stage: int = 0) -> "CubeSet":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        head = dict(tok.split("=", 1) for tok in lines[0].split())
        n = int(head["n"])
        rinv = int(Fraction(head["r"]).denominator)
        grid = Grid(n, rinv, head.get("kind") == "ultrametric", ring)
        scale = int(head["scale"])
        cubes = [Cube([int(x) for x in ln.split()], scale, grid) for ln in lines[1:]]
        if len(cubes) != int(head["count"]):
            raise ValueError("cube count does not match header")
        return cls(cubes, scale, grid, stage)


def union_cubeset(sets, scale: int, grid: Grid, stage: int = 0) -> CubeSet:
    out = []
    for s in sets:
        for c in s:
            out.extend(subdivide(c, scale) if c.scale < scale else [c])
    return CubeSet(out, scale, grid, stage)


# ---------------------------------------------------------------- tuples

class TupleCursor:
    """Resumable lexicographic stream of injections {0..v-1} -> {0..M-1}."""

    def __init__(self, M: int, v: int, start=None):
        if M < v:
            raise ValueError(f"need at least {v} cubes, have {M}")
        self.M = M
        self.v = v
        self.current = tuple(start) if start is not None else tuple(range(v))
        self.done = False

    def __iter__(self):
        return self

    def __next__(self):
        if self.done:
            raise StopIteration
        out = self.current
        nxt = self._successor(out)
        if nxt is None:
            self.done = True
        else:
            self.current = nxt
        return out

    def _successor(self, t):
        M, v = self.M, self.v
        for i in range(v - 1, -1, -1):
            used = set(t[:i])
            for cand in range(t[i] + 1, M):
                if cand not in used:
                    head = list(t[:i]) + [cand]
                    taken = set(head)
                    rest = [x for x in range(M) if x not in taken][: v - i - 1]
                    if len(rest) == v - i - 1:
                        return tuple(head + rest)
        return None

    def state(self):
        return (self.M, self.v, self.current, self.done)


def enumerate_tuples(s, v: int):
    return TupleCursor(len(s), v)


def falling_factorial(M: int, v: int) -> int:
    out = 1
    for i in range(v):
        out *= M - i
    return out
