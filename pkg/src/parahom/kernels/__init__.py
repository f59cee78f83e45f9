"""Hot sampling/smoothing kernels with a numba backend and a numpy fallback.

The backend is chosen once at import time. Set the environment variable
``PARAHOM_NO_NUMBA=1`` to force the pure-numpy path (useful for debugging
and as the baseline in ``benchmarks/bench_kernels.py``). If numba is not
importable the numpy path is used silently.
"""

import os

from . import _reference

_FORCE_NUMPY = os.environ.get("PARAHOM_NO_NUMBA", "0") not in ("0", "", "false", "False")

if not _FORCE_NUMPY:
    try:
        from . import _accel as _impl
        BACKEND = "numba"
    except ImportError:
        _impl = _reference
        BACKEND = "numpy"
else:
    _impl = _reference
    BACKEND = "numpy"

sample_periodic_nearest_1d = _impl.sample_periodic_nearest_1d
sample_periodic_linear_1d = _impl.sample_periodic_linear_1d
sample_periodic_nearest_2d = _impl.sample_periodic_nearest_2d
sample_periodic_linear_2d = _impl.sample_periodic_linear_2d
reflect_fold_1d = _impl.reflect_fold_1d
locate_element_1d = _impl.locate_element_1d
locate_element_2d = _impl.locate_element_2d
gather_element_1d = _impl.gather_element_1d
gather_element_2d = _impl.gather_element_2d
steklov_element_1d = _impl.steklov_element_1d
steklov_element_2d = _impl.steklov_element_2d
sample_grid_linear_1d = _impl.sample_grid_linear_1d
sample_grid_linear_2d = _impl.sample_grid_linear_2d

reference = _reference

__all__ = [
    "BACKEND", "reference",
    "sample_periodic_nearest_1d", "sample_periodic_linear_1d",
    "sample_periodic_nearest_2d", "sample_periodic_linear_2d",
    "reflect_fold_1d", "locate_element_1d", "locate_element_2d",
    "gather_element_1d", "gather_element_2d",
    "steklov_element_1d", "steklov_element_2d",
    "sample_grid_linear_1d", "sample_grid_linear_2d",
]
