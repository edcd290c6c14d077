import numpy as np
from setuptools import Extension, setup

# The compiled kernels are optional: hdembed falls back to a pure-numpy
# backend at import time when the extension is missing.
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "hdembed._kernels",
                ["src/hdembed/_kernels.pyx"],
                include_dirs=[np.get_include()],
                # popcnt exists on every x86-64 from the last 15 years; the
                # kernel file still carries a SWAR fallback for other ISAs.
                extra_compile_args=["-O3", "-mpopcnt"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
