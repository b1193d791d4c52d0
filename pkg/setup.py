"""Build script for the optional compiled kernel.

The package works without the extension (a pure-Python backend with the
same numerical semantics is selected at import time), so the extension is
marked optional: a failed compile downgrades to the fallback instead of
aborting the install.
"""

import os

from setuptools import Extension, setup

PYX = "src/gaslift_rto/_kernels/_core.pyx"

ext_modules = []
if os.path.exists(PYX):
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "gaslift_rto._kernels._core",
                    [PYX],
                    # -O2 without -ffast-math / -march=native: keeps IEEE
                    # double semantics identical to the pure-Python backend.
                    extra_compile_args=["-O2"],
                    optional=True,
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        pass

setup(ext_modules=ext_modules)
