"""Build script for the optional compiled simplex kernel.

The package works without the extension (a numpy fallback is selected at
import time), so a failed compilation only costs speed. Set CAPPLAN_PURE=1
to skip the extension entirely.
"""

import os

from setuptools import setup

ext_modules = []
if not os.environ.get("CAPPLAN_PURE"):
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools import Extension

        ext = Extension(
            "capplan.optimize._kernel",
            ["src/capplan/optimize/_kernel.pyx"],
            include_dirs=[numpy.get_include()],
            # -ffp-contract=off keeps the pivot arithmetic bit-identical to the
            # numpy fallback (no fused multiply-add in the update loops).
            extra_compile_args=["-O3", "-ffp-contract=off"],
            define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        )
        ext_modules = cythonize(
            [ext],
            compiler_directives={
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
                "language_level": "3",
            },
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
