"""Rigorous range enclosures of polynomials over boxes and balls."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from ..errors import DimensionMismatch
from .interval import Interval
from .algebraic import AlgebraicElement


@dataclass(frozen=True)
class UltraEnclosure:
    """|p(x)| <= r^valuation on the ball; when ``exact``, |p(x)| == r^valuation."""

    valuation: int
    exact: bool
    precision: int

    def excludes_zero(self) -> bool:
        return self.exact

    def abs_lower(self, r: Fraction) -> Fraction:
        return r ** self.valuation if self.exact else Fraction(0)

    def abs_upper(self, r: Fraction) -> Fraction:
        return r ** self.valuation if self.valuation < self.precision else r ** self.precision


def coeff_interval(c, width=None) -> Interval:
    if isinstance(c, AlgebraicElement):
        return c.interval(width)
    return Interval(c)


def enclose_natural(p, box, width=None) -> Interval:
    """Termwise interval extension; inclusion-isotone in the box."""
    if len(box) != p.nvars:
        raise DimensionMismatch("box dimension does not match the polynomial")
    acc = Interval(0)
    cache = {}
    for e in p.order:
        t = coeff_interval(p.terms[e], width)
        for i, a in enumerate(e):
            if a:
                key = (i, a)
                if key not in cache:
                    cache[key] = box[i] ** a
                t = t * cache[key]
        acc = acc + t
    return acc


def enclose_taylor(p, box, width=None) -> Interval:
    """Centered form around the box midpoint; sound and second-order tight."""
    if len(box) != p.nvars:
        raise DimensionMismatch("box dimension does not match the polynomial")
    center = [b.mid() for b in box]
    rad = [Interval(-b.width() / 2, b.width() / 2) for b in box]
    coeffs = p.taylor([p.ring.coerce(c) for c in center])
    acc = Interval(0)
    cache = {}
    for h, c in coeffs.items():
        t = coeff_interval(c, width)
        for i, b in enumerate(h):
            if b:
                key = (i, b)
                if key not in cache:
                    cache[key] = rad[i] ** b
                t = t * cache[key]
        acc = acc + t
    return acc


def enclose_real(p, box, width=None, method: str = "natural") -> Interval:
    if method == "natural":
        return enclose_natural(p, box, width)
    if method == "taylor":
        return enclose_taylor(p, box, width)
    if method == "tight":
        a = enclose_natural(p, box, width)
        b = enclose_taylor(p, box, width)
        return a.intersect(b) or b
    raise ValueError(f"unknown enclosure method {method!r}")


def enclose_ultra(p, centers, scales) -> UltraEnclosure:
    """Enclosure of p over the product of balls {x_i : |x_i - c_i| <= r^{s_i}}.

    Expands p around the centers; the ultrametric inequality bounds every
    non-constant Taylor term by val(a_h) + sum(s_i h_i).
    """
    if len(centers) != p.nvars or len(scales) != p.nvars:
        raise DimensionMismatch("ball count does not match the polynomial")
    ctx = p.ring
    P = ctx.precision
    coeffs = p.taylor(list(centers))
    v0 = P
    m = P
    for h, c in coeffs.items():
        vc = ctx.valuation(c)
        if not any(h):
            v0 = vc
            continue
        if vc >= P:
            continue
        m = min(m, vc + sum(s * b for s, b in zip(scales, h)))
    if v0 < m and v0 < P:
        return UltraEnclosure(v0, True, P)
    return UltraEnclosure(min(v0, m, P), False, P)


def poly_enclose(p, box, width=None, method: str = "natural"):
    """Enclosure of p over a product of cubes (one per block) or of intervals.

    Real boxes give an Interval; balls in a local field give an UltraEnclosure.
    """
    items = list(box)
    if items and all(isinstance(b, Interval) for b in items):
        return enclose_real(p, items, width, method)
    if len(items) != p.v:
        raise DimensionMismatch(f"expected {p.v} cubes, got {len(items)}")
    if getattr(items[0].grid, "ultrametric", False):
        centers, scales = [], []
        for c in items:
            centers.extend(c.center_elements(p.ring))
            scales.extend([c.scale] * c.grid.n)
        return enclose_ultra(p, centers, scales)
    ivs = []
    for c in items:
        ivs.extend(c.intervals())
    return enclose_real(p, ivs, width, method)
