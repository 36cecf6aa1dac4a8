import os

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pure-Python install; groupbound falls back at import
    cythonize = None

# Contraction into FMA would make the compiled and fallback kernels round differently.
compile_args = ["-O3", "-ffp-contract=off"]

extensions = []
if cythonize is not None and not os.environ.get("GROUPBOUND_NO_EXT"):
    extensions = cythonize(
        [
            Extension(
                "groupbound._kernels",
                ["src/groupbound/_kernels.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=compile_args,
            )
        ],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
            "initializedcheck": False,
        },
    )

setup(ext_modules=extensions)
