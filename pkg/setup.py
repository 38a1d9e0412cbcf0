"""Build script: compiles the optional Cython kernel extension.

The package is fully functional without the extension (a pure-Python twin
is selected at import time); the extension only speeds up the exact
integer kernels that dominate the identity and certificate suites.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [Extension("tncheck._kernels", ["src/tncheck/_kernels.pyx"])],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
