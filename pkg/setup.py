"""Build the optional Cython curvature kernel.

The package works without it (a NumPy fallback is selected at import),
so a failed compile only disables the fast path.
"""

import numpy
from setuptools import setup, Extension

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

ext_modules = []
if cythonize is not None:
    ext_modules = cythonize(
        [
            Extension(
                "renvol._curvkernel",
                ["src/renvol/_curvkernel.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)
