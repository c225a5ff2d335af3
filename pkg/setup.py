"""Builds the compiled kernel extension; the package falls back to the
numpy implementation when the build is unavailable."""

import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = [
    Extension(
        "contrastlab._fastkern",
        sources=["src/contrastlab/_fastkern.pyx"],
        include_dirs=[np.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
]

setup(ext_modules=cythonize(extensions, language_level=3))
