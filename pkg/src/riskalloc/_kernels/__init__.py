"""Hot evaluation kernels with a compiled core and a numpy fallback.

The compiled extension is preferred when present; set the environment
variable ``RISKALLOC_PURE_PYTHON=1`` to force the numpy implementation.
``BACKEND`` reports which one is active.
"""

import os

if os.environ.get("RISKALLOC_PURE_PYTHON"):
    from . import _numpy as _impl

    BACKEND = "numpy"
else:
    try:
        from . import _native as _impl  # type: ignore[no-redef]

        BACKEND = "native"
    except ImportError:
        from . import _numpy as _impl  # type: ignore[no-redef]

        BACKEND = "numpy"

atom_moments = _impl.atom_moments
discrete_paths = _impl.discrete_paths
uniform_paths = _impl.uniform_paths
log_growth_sums = _impl.log_growth_sums

__all__ = [
    "BACKEND",
    "atom_moments",
    "discrete_paths",
    "uniform_paths",
    "log_growth_sums",
]
