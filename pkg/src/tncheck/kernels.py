"""Backend selection for the exact integer kernels.

Imports the compiled extension when it is built, otherwise the
pure-Python twin.  ``TNCHECK_PURE_PYTHON=1`` forces the fallback (used by
the benchmark to compare the two).
"""

import os

if os.environ.get("TNCHECK_PURE_PYTHON") == "1":
    from tncheck import _kernels_py as _impl
else:
    try:
        from tncheck import _kernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        from tncheck import _kernels_py as _impl

BACKEND = _impl.BACKEND
det_int = _impl.det_int
adj_int = _impl.adj_int
matmul_int = _impl.matmul_int
row_echelon_int = _impl.row_echelon_int
