"""Build script for the optional compiled convolution core.

The package works without the extension (a pure-numpy backend is selected
at import time); building it just makes training faster.
"""

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "blurlab._convcore",
                ["src/blurlab/_convcore.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
