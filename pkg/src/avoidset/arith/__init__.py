"""Exact arithmetic: rings, polynomials and rigorous enclosures."""
from .dyadic import DyadicRational
from .algebraic import AlgebraicField, AlgebraicElement
from .padic import PadicContext, PadicInteger
from .fq import FqContext, FqSeries, GF
from .unramified import UnramifiedExtension, UnramifiedElement
from .rings import (QQ, RationalField, ring_add, ring_mul, context_from_mapping, is_ultrametric,
                    parse_exact, parse_vector, with_precision, serialize_element)
from .interval import Interval
from .poly import MultiPolynomial, parse_poly
from .enclose import poly_enclose, enclose_real, enclose_ultra, UltraEnclosure


def poly_eval(p, x):
    return p.eval(x)


def poly_partial(p, block, coord):
    return p.partial(block, coord)


__all__ = [
    "DyadicRational", "AlgebraicField", "AlgebraicElement", "PadicContext", "PadicInteger", "FqContext",
    "FqSeries", "GF", "UnramifiedExtension", "UnramifiedElement", "QQ", "RationalField", "ring_add",
    "ring_mul", "context_from_mapping", "is_ultrametric", "parse_exact", "parse_vector", "with_precision",
    "serialize_element", "Interval", "MultiPolynomial", "parse_poly", "poly_enclose", "enclose_real",
    "enclose_ultra", "UltraEnclosure", "poly_eval", "poly_partial",
]
