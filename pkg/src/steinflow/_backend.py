"""Backend selection for the hot kernels.

At import time the compiled extension (steinflow._accel) is preferred; if it
was not built, the pure-numpy fallback is used.  STEINFLOW_BACKEND=numpy|cython
forces a backend (the default "auto" picks the fastest available one).
"""

import os

import numpy as np

from . import _accel_np

_requested = os.environ.get("STEINFLOW_BACKEND", "auto").lower()
if _requested not in {"auto", "cython", "numpy"}:
    raise ValueError(f"STEINFLOW_BACKEND must be auto, cython or numpy, got {_requested!r}")

if _requested == "numpy":
    _impl = _accel_np
    BACKEND = "numpy"
else:
    try:
        from . import _accel as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError as exc:
        if _requested == "cython":
            raise ImportError(
                "STEINFLOW_BACKEND=cython but the accelerator is not built; "
                "reinstall with a C compiler or use STEINFLOW_BACKEND=numpy"
            ) from exc
        _impl = _accel_np
        BACKEND = "numpy"


def _as_c_float64(x):
    return np.ascontiguousarray(x, dtype=np.float64)


def pairwise_sq_dists(x):
    return _impl.pairwise_sq_dists(_as_c_float64(x))


def gram_gaussian(x, sigma2):
    return _impl.gram_gaussian(_as_c_float64(x), float(sigma2))
