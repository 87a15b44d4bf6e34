"""Select the compiled kernels when available, the pure-Python twins otherwise.

Set ``PHDAE_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _kernels_py

if os.environ.get("PHDAE_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl
    except ImportError:
        _impl = _kernels_py

BACKEND = "cython" if _impl is not _kernels_py else "python"

pendulum_step = _impl.pendulum_step
rk4_run = _impl.rk4_run
STATUS_OK = _kernels_py.STATUS_OK
STATUS_MAX_ITER = _kernels_py.STATUS_MAX_ITER
STATUS_DIVERGED = _kernels_py.STATUS_DIVERGED
STATUS_SINGULAR = _kernels_py.STATUS_SINGULAR
