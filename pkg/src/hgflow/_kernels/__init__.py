"""Kernel backend selection.

The compiled extension (``_core``, Cython + BLAS) is preferred; the pure
numpy backend is the fallback. ``HGFLOW_KERNELS=python`` or
``HGFLOW_KERNELS=c`` forces a choice; forcing ``c`` raises if the
extension was not built.
"""

import os

from . import numpy_backend

_requested = os.environ.get("HGFLOW_KERNELS", "").strip().lower()

if _requested == "python":
    backend = numpy_backend
else:
    try:
        from . import _core as backend
    except ImportError:
        if _requested == "c":
            raise ImportError(
                "HGFLOW_KERNELS=c but the compiled extension is not available; "
                "reinstall the package or unset HGFLOW_KERNELS"
            )
        backend = numpy_backend

BACKEND_NAME = backend.NAME

affine_forward = backend.affine_forward
affine_backward = backend.affine_backward
silu_forward = backend.silu_forward
silu_backward = backend.silu_backward
adam_update = backend.adam_update
