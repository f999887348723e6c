"""Hot numerical kernels with a compiled core and a numpy fallback.

The compiled extension ``_core`` is used when it has been built and the
environment variable ``MFSC_PURE_PYTHON`` is unset or ``0``; otherwise the
numpy versions in ``_fallback`` are used. ``BACKEND`` names the active one.
"""
import importlib
import os

from mfsc._kernels import _fallback


def _load_core():
    if os.environ.get("MFSC_PURE_PYTHON", "0") not in ("", "0"):
        return None
    try:
        return importlib.import_module("mfsc._kernels._core")
    except ImportError:  # extension not built
        return None


_core = _load_core()

_impl = _core if _core is not None else _fallback
BACKEND = "compiled" if _core is not None else "python"

halfspace_pass = _impl.halfspace_pass
union2_pass = _impl.union2_pass
accumulate_rows = _impl.accumulate_rows
accumulate_rows_choice = _impl.accumulate_rows_choice
sparse_box_project = _impl.sparse_box_project
log_penalty_sum = _impl.log_penalty_sum
frac_penalty_sum = _impl.frac_penalty_sum


def compiled_available() -> bool:
    return _core is not None


def backends() -> dict:
    """Map of available backend name to kernel module."""
    out = {"python": _fallback}
    if _core is not None:
        out["compiled"] = _core
    return out
