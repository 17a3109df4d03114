"""Backend selection for the hot loops.

The numba backend is used when numba imports cleanly, unless the environment
variable ``PRICESIM_DISABLE_NUMBA`` is set to a non-empty value other than
``0``. Both backends expose the same five functions.
"""

import importlib
import os

from . import _numpy

_disabled = os.environ.get("PRICESIM_DISABLE_NUMBA", "") not in ("", "0")

BACKENDS = {"numpy": _numpy}
if not _disabled:
    try:
        BACKENDS["numba"] = importlib.import_module("._numba", __name__)
    except ImportError:  # pragma: no cover - numba is a declared dependency
        pass

BACKEND = "numba" if "numba" in BACKENDS else "numpy"
_impl = BACKENDS[BACKEND]

greedy_color_order = _impl.greedy_color_order
dsatur = _impl.dsatur
smallest_last_order = _impl.smallest_last_order
min_cost_assignment = _impl.min_cost_assignment
nondominated_mask = _impl.nondominated_mask

__all__ = [
    "BACKEND",
    "BACKENDS",
    "dsatur",
    "greedy_color_order",
    "min_cost_assignment",
    "nondominated_mask",
    "smallest_last_order",
]
