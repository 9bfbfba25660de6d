"""Build script. The compiled simplex kernel is optional: if Cython or a C
compiler is unavailable the package installs without it and falls back to the
pure NumPy kernel at import time."""
import os

from setuptools import setup

ext_modules = []
if os.environ.get("RELUFORGE_SKIP_EXT", "0") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "reluforge.opt._speedups",
                    ["src/reluforge/opt/_speedups.pyx"],
                    include_dirs=[np.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            language_level=3,
        )
    except Exception:
        ext_modules = []

setup(ext_modules=ext_modules)
