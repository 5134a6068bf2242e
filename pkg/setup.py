"""Build the optional Cython kernels.

The package works without them: ``uavtrack.kernels`` falls back to the
pure-Python implementation when the extension is missing.
"""
import os

from setuptools import setup

ext_modules = []
if not os.environ.get("UAVTRACK_NO_EXT"):
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "uavtrack._core",
                    ["src/uavtrack/_core.pyx"],
                    include_dirs=[np.get_include()],
                    # bitwise parity with the numpy fallback needs no FMA contraction
                    extra_compile_args=["-O3", "-ffp-contract=off"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
