"""Backend selection for the inner loops.

The compiled ``_ckernels`` extension is used when it is importable; set
``RBCOM_PURE_PYTHON=1`` to force the pure-Python fallback.
"""

import os

from . import _pykernels

try:
    if os.environ.get("RBCOM_PURE_PYTHON", "") not in ("", "0"):
        raise ImportError("pure-Python backend requested")
    from . import _ckernels as _impl

    BACKEND = "cython"
except ImportError:
    _impl = _pykernels
    BACKEND = "python"

integrate_rate = _impl.integrate_rate
echo_recursion = _impl.echo_recursion

BACKENDS = {"python": _pykernels}
if BACKEND == "cython":
    BACKENDS["cython"] = _impl
else:
    try:
        from . import _ckernels

        BACKENDS["cython"] = _ckernels
    except ImportError:
        pass
