"""tncheck: exact verification, synthesis and refutation of T_N / T_N'
configurations for div-curl differential inclusions, plus a floating-point
graph-varifold first-variation toolkit.

Everything algebraic runs over exact rationals; floating point is confined
to :mod:`tncheck.varifold`.
"""

from tncheck.kernels import BACKEND as KERNEL_BACKEND

__version__ = "0.1.0"

__all__ = ["KERNEL_BACKEND", "__version__"]
