"""Select the kernel backend at import time.

The compiled extension ``prlandscape._core`` is preferred when present;
otherwise the numpy implementations are used.  Set PRLANDSCAPE_BACKEND to
``python`` or ``cython`` to force a choice (``cython`` raises if the
extension is missing).
"""

import os

from . import _kernels_py
from .errors import ConfigurationError

_requested = os.environ.get("PRLANDSCAPE_BACKEND", "auto").strip().lower()

if _requested in ("", "auto"):
    try:
        from . import _core as kernels

        BACKEND = "cython"
    except ImportError:
        kernels = _kernels_py
        BACKEND = "python"
elif _requested == "python":
    kernels = _kernels_py
    BACKEND = "python"
elif _requested in ("cython", "compiled"):
    from . import _core as kernels

    BACKEND = "cython"
else:
    raise ConfigurationError(
        f"PRLANDSCAPE_BACKEND={_requested!r}: expected 'auto', 'python' or 'cython'"
    )
