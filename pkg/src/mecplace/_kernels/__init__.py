"""Hot numerical kernels with a compiled core and a pure-Python fallback.

The Cython extension ``_core`` is used when it imports; otherwise (or when
``MECPLACE_PURE_PYTHON`` is set to a non-empty value other than ``0``) the
numpy implementation in ``_pure`` is used.  Both expose the same functions.
"""
import os

from . import _pure

_NAMES = (
    "lambert_w0",
    "lambert_w0_array",
    "rate_frac",
    "primal_map",
    "dual_ascent",
    "admm_local",
    "capped_shift",
)


def _load_compiled():
    if os.environ.get("MECPLACE_PURE_PYTHON", "") not in ("", "0"):
        return None
    try:
        from . import _core
    except ImportError:
        return None
    return _core


_compiled = _load_compiled()
backend = _compiled if _compiled is not None else _pure
BACKEND = "cython" if _compiled is not None else "python"

CONVERGED = _pure.CONVERGED
MAX_ITER = _pure.MAX_ITER
DEGENERATE = _pure.DEGENERATE


def available_backends():
    """Map backend name to module for every importable implementation."""
    out = {"python": _pure}
    try:
        from . import _core
    except ImportError:
        pass
    else:
        out["cython"] = _core
    return out


lambert_w0 = backend.lambert_w0
lambert_w0_array = backend.lambert_w0_array
rate_frac = backend.rate_frac
primal_map = backend.primal_map
dual_ascent = backend.dual_ascent
admm_local = backend.admm_local
capped_shift = backend.capped_shift

__all__ = ["BACKEND", "backend", "available_backends", *_NAMES]
