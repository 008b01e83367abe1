"""Landmark systems, landmark pairs and the axiom audit harness."""
from .systems import (LandmarkSystem, DyadicSystem, AlgebraicSystem, UltraSystem, FunctionFieldSystem,
                      PadicSystem, UnramifiedSystem, system_for, ell_value, enumerate_landmarks,
                      nearest_landmark, INF)
from .pairs import (LandmarkPair, ApproximationWitness, PairError, derive_polynomial_pair,
                    build_rational_approx_pair)
from .contfrac import cf_rational, cf_quadratic, convergents, quadratic_root_cf
from .audit import AuditReport, audit_system

__all__ = [
    "LandmarkSystem", "DyadicSystem", "AlgebraicSystem", "UltraSystem", "FunctionFieldSystem",
    "PadicSystem", "UnramifiedSystem", "system_for", "ell_value", "enumerate_landmarks",
    "nearest_landmark", "INF", "LandmarkPair", "ApproximationWitness", "PairError",
    "derive_polynomial_pair", "build_rational_approx_pair", "cf_rational", "cf_quadratic",
    "convergents", "quadratic_root_cf", "AuditReport", "audit_system",
]
