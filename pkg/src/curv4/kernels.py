"""Backend selection for the plane-search kernels.

The compiled ``_ckernels`` extension is used when it imports; otherwise the
pure-Python ``_pykernels`` module.  Setting ``CURV4_PURE_PYTHON=1`` forces the
fallback.
"""

import os

from . import _pykernels

python_backend = _pykernels
compiled_backend = None

if os.environ.get("CURV4_PURE_PYTHON", "") not in ("", "0"):
    backend = _pykernels
else:
    try:
        from . import _ckernels as compiled_backend
    except ImportError:
        backend = _pykernels
    else:
        backend = compiled_backend

BACKEND_NAME = "cython" if backend is compiled_backend else "python"
