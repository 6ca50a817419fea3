"""Backend selection for the orbit kernels.

The compiled extension is used when it imports; otherwise the numpy
implementation is used. ``BACKEND`` names the active one and
``available_backends()`` lists every importable module, so tests can
compare them against each other.
"""

import importlib
import warnings

from . import _kernels_py

try:
    from . import _kernels as _active
    BACKEND = "compiled"
except ImportError as exc:  # pragma: no cover - depends on the build
    warnings.warn(f"bowenhit: compiled kernels unavailable ({exc}); using numpy fallback")
    _active = _kernels_py
    BACKEND = "numpy"

shift_hits = _active.shift_hits
shift_return_gaps = _active.shift_return_gaps
doubling_hits = _active.doubling_hits
doubling_return_gaps = _active.doubling_return_gaps
tower_hits = _active.tower_hits


def available_backends():
    out = {"numpy": _kernels_py}
    try:
        out["compiled"] = importlib.import_module("bowenhit._kernels")
    except ImportError:  # pragma: no cover
        pass
    return out


def get_backend(name=None):
    if name is None:
        return _active
    return available_backends()[name]
