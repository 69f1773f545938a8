import os

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # numpy fallback is used at runtime
    cythonize = None

ext_modules = []
if cythonize is not None and not os.environ.get("STOCHLOGISTIC_NO_EXT"):
    ext_modules = cythonize(
        [
            Extension(
                "stochlogistic._kernels",
                ["src/stochlogistic/_kernels.pyx"],
                include_dirs=[np.get_include()],
                # no FMA contraction: must match the numpy fallback bit for bit
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
