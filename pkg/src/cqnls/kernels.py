"""Backend selection for the hot loops.

The compiled Cython module is used when it imports; otherwise (or when
``CQNLS_PURE_PYTHON=1`` is set) the pure-Python twin is used. ``BACKEND``
names the active one.
"""

import os

if os.environ.get("CQNLS_PURE_PYTHON", "") not in ("", "0"):
    from ._pykernels import bisect_eigenvalues, shoot, sturm_count

    BACKEND = "python"
else:
    try:
        from ._kernels import bisect_eigenvalues, shoot, sturm_count

        BACKEND = "cython"
    except ImportError:  # extension not built
        from ._pykernels import bisect_eigenvalues, shoot, sturm_count

        BACKEND = "python"

__all__ = ["BACKEND", "bisect_eigenvalues", "shoot", "sturm_count"]
