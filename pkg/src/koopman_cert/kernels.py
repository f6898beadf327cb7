"""Backend selection for the hot kernels.

The compiled extension is preferred; the numpy fallback is selected when the
extension is missing or when KOOPMAN_CERT_PURE_PY=1 is set.  Both produce
identical output for identical inputs.
"""

import os

from . import _kernels_py

if os.environ.get("KOOPMAN_CERT_PURE_PY") == "1":
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

chain_paths = _impl.chain_paths
pair_counts = _impl.pair_counts


def backend_name():
    return BACKEND
