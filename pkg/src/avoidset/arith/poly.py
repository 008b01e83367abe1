"""Multivariate polynomials over the package's exact rings.

Variables come in v blocks of n coordinates; variable index
``block * n + coord`` (both 0-based).
"""
from __future__ import annotations

import math
import re
from fractions import Fraction
from itertools import product

from ..errors import DimensionMismatch, ConfigError
from .rings import QQ
from .algebraic import AlgebraicField


def _is_zero(c) -> bool:
    if isinstance(c, (int, Fraction)):
        return c == 0
    return c.is_zero()


def default_names(n: int, v: int, blocks=None):
    blocks = blocks or [f"x{b + 1}" for b in range(v)]
    if len(blocks) != v:
        raise DimensionMismatch("need one block name per block")
    if n == 1:
        return list(blocks)
    return [f"{b}{i + 1}" for b in blocks for i in range(n)]


class MultiPolynomial:
    def __init__(self, n: int, v: int, terms: dict, ring=QQ, names=None):
        self.n = n
        self.v = v
        self.nvars = n * v
        self.ring = ring
        self.names = list(names) if names else default_names(n, v)
        if len(self.names) != self.nvars:
            raise DimensionMismatch("wrong number of variable names")
        clean = {}
        for e, c in terms.items():
            e = tuple(int(a) for a in e)
            if len(e) != self.nvars:
                raise DimensionMismatch("exponent length differs from variable count")
            c = ring.coerce(c)
            if not _is_zero(c):
                clean[e] = c
        self.terms = clean
        # graded lexicographic, highest degree first
        self.order = sorted(clean, key=lambda e: (sum(e), e), reverse=True)
        self.degree = max((sum(e) for e in clean), default=0)

    # -- construction helpers
    @classmethod
    def constant(cls, n, v, c, ring=QQ, names=None):
        return cls(n, v, {(0,) * (n * v): c}, ring, names)

    def _like(self, terms):
        return MultiPolynomial(self.n, self.v, terms, self.ring, self.names)

    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return all(sum(e) == 0 for e in self.terms)

    def constant_term(self):
        return self.terms.get((0,) * self.nvars, self.ring.zero())

    def var_index(self, block: int, coord: int) -> int:
        if not (0 <= block < self.v and 0 <= coord < self.n):
            raise IndexError(f"no variable at block {block}, coord {coord}")
        return block * self.n + coord

    def __add__(self, other):
        out = dict(self.terms)
        for e, c in other.terms.items():
            out[e] = out[e] + c if e in out else c
        return self._like(out)

    def __neg__(self):
        return self._like({e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if not isinstance(other, MultiPolynomial):
            c = self.ring.coerce(other)
            return self._like({e: a * c for e, a in self.terms.items()})
        out = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out[e] + c1 * c2 if e in out else c1 * c2
        return self._like(out)

    __rmul__ = __mul__

    def __eq__(self, other):
        return (isinstance(other, MultiPolynomial) and self.nvars == other.nvars
                and self.terms == other.terms)

    def __hash__(self):
        return hash(tuple(sorted(self.terms.items(), key=lambda t: t[0])))

    # -- calculus
    def partial(self, block: int, coord: int) -> "MultiPolynomial":
        return self.partial_var(self.var_index(block, coord))

    def partial_var(self, i: int) -> "MultiPolynomial":
        out = {}
        for e, c in self.terms.items():
            if e[i]:
                ne = list(e)
                ne[i] -= 1
                out[tuple(ne)] = c * self.ring.coerce(e[i])
        return self._like(out)

    def apply_chain(self, chain) -> "MultiPolynomial":
        p = self
        for block, coord in chain:
            p = p.partial(block, coord)
        return p

    # -- evaluation
    def eval(self, x):
        if len(x) != self.nvars:
            raise DimensionMismatch(f"expected {self.nvars} inputs, got {len(x)}")
        x = [self.ring.coerce(a) if isinstance(a, (int, Fraction)) else a for a in x]
        powers = [dict() for _ in x]
        acc = None
        for e in self.order:
            term = self.terms[e]
            for i, a in enumerate(e):
                if a:
                    pw = powers[i].get(a)
                    if pw is None:
                        pw = x[i] ** a
                        powers[i][a] = pw
                    term = term * pw
            acc = term if acc is None else acc + term
        if acc is None:
            return self.ring.zero()
        return acc

    __call__ = eval

    def taylor(self, center) -> dict:
        """Coefficients of p(center + h) as a polynomial in h (exponent -> coefficient)."""
        if len(center) != self.nvars:
            raise DimensionMismatch("center has wrong dimension")
        ring = self.ring
        cpow = [dict() for _ in center]

        def cp(i, k):
            d = cpow[i]
            if k not in d:
                d[k] = center[i] ** k if k else ring.one()
            return d[k]

        out = {}
        for e, coef in self.terms.items():
            per_var = []
            for i, a in enumerate(e):
                per_var.append([(b, math.comb(a, b), a - b) for b in range(a + 1)] if a else [(0, 1, 0)])
            for combo in product(*per_var):
                c = coef
                mult = 1
                for i, (b, binom, rest) in enumerate(combo):
                    mult *= binom
                    if rest:
                        c = c * cp(i, rest)
                if mult != 1:
                    c = c * ring.coerce(mult)
                h = tuple(b for b, _, _ in combo)
                out[h] = out[h] + c if h in out else c
        return {h: c for h, c in out.items() if not _is_zero(c)}

    def __repr__(self):
        return f"MultiPolynomial({self.to_text()})"

    def to_text(self) -> str:
        parts = []
        for e in self.order:
            mono = "*".join(f"{self.names[i]}^{a}" if a > 1 else self.names[i]
                            for i, a in enumerate(e) if a)
            c = self.terms[e]
            cs = str(c) if isinstance(c, (int, Fraction)) else repr(c)
            parts.append(f"({cs})*{mono}" if mono else f"({cs})")
        return " + ".join(parts) or "0"


_FLOAT = re.compile(r"\d\.\d*|\.\d|\d[eE][+-]?\d")


def parse_poly(text: str, n: int, v: int, ring=QQ, blocks=None, theta: str = "theta") -> MultiPolynomial:
    """Parse a polynomial expression with exact coefficients.

    Variable names follow ``default_names``; for an algebraic coefficient
    field the symbol ``theta`` denotes the generator.
    """
    import sympy

    if _FLOAT.search(text):
        raise ConfigError(f"decimal literal in polynomial {text!r}")
    names = default_names(n, v, blocks)
    syms = sympy.symbols(names)
    local = {nm: s for nm, s in zip(names, syms)}
    gens = list(syms)
    th = None
    if isinstance(ring, AlgebraicField):
        th = sympy.Symbol(theta)
        local[theta] = th
        gens.append(th)
    try:
        expr = sympy.parse_expr(text.replace("^", "**"), local_dict=local, evaluate=True)
        extra = {str(x) for x in expr.free_symbols} - set(local)
        if extra:
            raise ValueError(f"unknown variables {sorted(extra)}")
        poly = sympy.Poly(sympy.expand(expr), *gens, domain="QQ")
    except Exception as exc:  # sympy raises a zoo of types here
        raise ConfigError(f"cannot parse polynomial {text!r}: {exc}") from None
    terms = {}
    for mon, coef in poly.terms():
        c = Fraction(int(coef.p), int(coef.q))
        if th is not None:
            e, m = mon[:-1], mon[-1]
            val = ring.coerce(c) * (ring.theta() ** m)
            terms[e] = terms[e] + val if e in terms else val
        else:
            terms[tuple(mon)] = c
    return MultiPolynomial(n, v, terms, ring, names)
