"""Backend selection for the hot kernels.

The compiled extension is preferred; set ``LEVELQUE_PURE_PYTHON=1`` to force
the numpy fallback.
"""

import os

from . import _kernels_py

if os.environ.get("LEVELQUE_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl
    except ImportError:
        _impl = _kernels_py

BACKEND = "compiled" if _impl is not _kernels_py else "python"

besselk = _impl.besselk
besselk_array = _impl.besselk_array
coset_row_sum = _impl.coset_row_sum


def backends():
    """Available backends as ``{name: module}``."""
    out = {"python": _kernels_py}
    try:
        from . import _kernels

        out["compiled"] = _kernels
    except ImportError:
        pass
    return out
