"""Hot loops: the Turing-machine stepper and mutation-event application.

The Cython build (``_ckernel``) is used when it imports; otherwise the
pure-Python ``_pykernel`` takes over with identical semantics. Set
``INDEVO_PURE_PYTHON=1`` to force the fallback.
"""

import importlib
import os

from . import _pykernel
from ._pykernel import EDGE, HALTED, LIMIT, WATCH


def _load_compiled():
    if os.environ.get("INDEVO_PURE_PYTHON"):
        return None
    try:
        return importlib.import_module("._ckernel", __name__)
    except ImportError:  # extension not built
        return None


_ckernel = _load_compiled()

backend = _ckernel if _ckernel is not None else _pykernel
BACKEND_NAME = "cython" if _ckernel is not None else "python"

execute = backend.execute
apply_events = backend.apply_events

__all__ = [
    "BACKEND_NAME",
    "EDGE",
    "HALTED",
    "LIMIT",
    "WATCH",
    "apply_events",
    "execute",
]
