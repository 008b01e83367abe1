"""Ring contexts, generic ring_add / ring_mul, and descriptor loading."""
from __future__ import annotations

import re
from fractions import Fraction

from ..errors import RingMismatch, ConfigError
from .dyadic import DyadicRational
from .algebraic import AlgebraicField, AlgebraicElement
from .padic import PadicContext, PadicInteger
from .fq import FqContext, FqSeries
from .unramified import UnramifiedExtension, UnramifiedElement


class RationalField:
    """Exact rationals; the coefficient ring for real polynomials."""

    kind = "rational"
    archimedean = True

    def zero(self):
        return Fraction(0)

    def one(self):
        return Fraction(1)

    def coerce(self, x):
        if isinstance(x, DyadicRational):
            return x.to_fraction()
        if isinstance(x, float):
            raise TypeError("floats are not exact")
        return Fraction(x)

    def key(self):
        return ("rational",)

    def __eq__(self, other):
        return isinstance(other, RationalField)

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        return "RationalField()"


QQ = RationalField()


def context_of(x):
    if isinstance(x, PadicInteger):
        return x.ctx
    if isinstance(x, FqSeries):
        return x.ctx
    if isinstance(x, UnramifiedElement):
        return x.ext
    if isinstance(x, AlgebraicElement):
        return x.field
    if isinstance(x, DyadicRational):
        return ("dyadic", x.base)
    if isinstance(x, (int, Fraction)):
        return QQ
    raise RingMismatch(f"not a ring element: {x!r}")


def _same_ring(a, b):
    ta, tb = type(a), type(b)
    if ta is not tb and not (isinstance(a, (int, Fraction)) and isinstance(b, (int, Fraction))):
        raise RingMismatch(f"{ta.__name__} vs {tb.__name__}")


def ring_add(a, b):
    _same_ring(a, b)
    return a + b


def ring_mul(a, b):
    _same_ring(a, b)
    return a * b


def is_ultrametric(ctx) -> bool:
    return getattr(ctx, "archimedean", True) is False


_INT = re.compile(r"^[+-]?\d+$")
_FRAC = re.compile(r"^[+-]?\d+/\d+$")


def parse_exact(token: str):
    """Parse an integer or fraction literal; decimal floats are rejected."""
    token = token.strip()
    if _INT.match(token):
        return int(token)
    if _FRAC.match(token):
        return Fraction(token)
    raise ConfigError(f"not an exact numeric literal: {token!r}")


def parse_vector(text: str):
    return [parse_exact(t) for t in text.replace(",", " ").split()]


def context_from_mapping(m) -> object:
    """Build a ring context from a key/value mapping (one config section)."""
    kind = m.get("kind", "").strip()
    try:
        if kind in ("dyadic", "real", "rational"):
            return QQ
        if kind == "algebraic":
            minpoly = parse_vector(m["minpoly"])
            enc = parse_vector(m["enclosure"])
            return AlgebraicField(minpoly, enc)
        if kind == "padic":
            return PadicContext(parse_exact(m["p"]), parse_exact(m["precision"]))
        if kind == "fq":
            return FqContext(parse_exact(m["q"]), parse_exact(m["precision"]))
        if kind == "unramified":
            return UnramifiedExtension(parse_exact(m["p"]), parse_vector(m["poly"]),
                                       parse_exact(m["precision"]))
    except KeyError as e:
        raise ConfigError(f"missing key {e.args[0]!r} for ring kind {kind!r}") from None
    raise ConfigError(f"unknown ring kind {kind!r}")


def with_precision(ctx, precision: int):
    """The same ring at another truncation precision."""
    if isinstance(ctx, PadicContext):
        return PadicContext(ctx.p, precision)
    if isinstance(ctx, FqContext):
        return FqContext(ctx.q, precision)
    if isinstance(ctx, UnramifiedExtension):
        return UnramifiedExtension(ctx.p, ctx.poly, precision)
    return ctx


def serialize_element(x) -> str:
    if isinstance(x, (int, Fraction)):
        return str(x)
    return x.serialize()
