"""Kernel backend selection: compiled extension if importable, else pure Python.

Set AVOIDSET_PURE_PYTHON=1 to force the fallback.
"""
import os

from . import _pykernels as python_backend

compiled_backend = None
if not os.environ.get("AVOIDSET_PURE_PYTHON"):
    try:
        from . import _kernels as compiled_backend  # type: ignore
    except ImportError:
        compiled_backend = None

backend = compiled_backend or python_backend
BACKEND = "cython" if compiled_backend is not None else "python"


def _dispatch(name):
    fast = getattr(backend, name)
    slow = getattr(python_backend, name)

    def run(*args, **kw):
        try:
            return fast(*args, **kw)
        except OverflowError:
            return slow(*args, **kw)

    run.__name__ = name
    return run


int_level = python_backend.int_level
int_pair_excess = _dispatch("int_pair_excess")
dyadic_pair_excess = _dispatch("dyadic_pair_excess")
fp_pair_excess = _dispatch("fp_pair_excess")
fp_poly_valuations = _dispatch("fp_poly_valuations")
