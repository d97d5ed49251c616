import os

import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

_npyrandom = os.path.join(np.get_include(), "..", "..", "random", "lib")

extensions = [
    Extension(
        "ppmvar._ckernels",
        ["src/ppmvar/_ckernels.pyx"],
        include_dirs=[np.get_include()],
        library_dirs=[_npyrandom],
        libraries=["npyrandom", "m"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        # no fast-math or FMA contraction: results must match the Python fallback bit for bit
        extra_compile_args=["-O2", "-ffp-contract=off"],
        optional=True,
    )
]

setup(ext_modules=cythonize(extensions, compiler_directives={"language_level": "3"}))
