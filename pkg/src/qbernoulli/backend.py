"""Kernel backend selection.

The compiled Cython kernels are used when available; otherwise the
pure-NumPy implementations take over.  Set ``QBERNOULLI_KERNELS=numpy`` or
``=cython`` to force a choice (forcing cython raises if the extension was
not built).
"""

import os

from . import _kernels_np

_FORCED = os.environ.get("QBERNOULLI_KERNELS", "").strip().lower()

if _FORCED == "numpy":
    kernels = _kernels_np
elif _FORCED == "cython":
    from . import _kernels_cy as kernels  # noqa: F401  (raises if unbuilt)
else:
    try:
        from . import _kernels_cy as kernels
    except ImportError:
        kernels = _kernels_np


def backend_name():
    """Name of the active kernel backend ('cython' or 'numpy')."""
    return kernels.BACKEND_NAME
