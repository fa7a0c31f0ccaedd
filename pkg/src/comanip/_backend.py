"""Kernel backend selection.

The compiled extension is preferred when importable; the pure-Python kernel is
the fallback. ``COMANIP_BACKEND`` forces a choice (``cython``, ``python`` or
``auto``). Both kernels are arithmetic twins, so simulation results do not
depend on the selection.
"""

from __future__ import annotations

import os

from . import _kernel_py


def _select():
    choice = os.environ.get("COMANIP_BACKEND", "auto").lower()
    if choice == "python":
        return _kernel_py
    try:
        from . import _kernel  # compiled extension
    except ImportError:
        if choice == "cython":
            raise ImportError(
                "COMANIP_BACKEND=cython but the compiled kernel is not available; "
                "reinstall the package with a C compiler present"
            )
        return _kernel_py
    return _kernel


kernel = _select()
BACKEND_NAME: str = kernel.BACKEND_NAME
