"""Build script for the optional compiled kernel extension.

The package works without the extension (a numpy fallback is selected at
import time); building it just makes the hot mask kernels faster.
"""

from setuptools import setup

try:
    import numpy as np
    from Cython.Build import cythonize
    from setuptools import Extension

    extensions = cythonize(
        [
            Extension(
                "maskbench.masks._kernels_cy",
                ["src/maskbench/masks/_kernels_cy.pyx"],
                include_dirs=[np.get_include()],
                # -ffp-contract=off: the rasterizer must agree bit-for-bit
                # with the pure float64 fallback, so no FMA contraction.
                extra_compile_args=["-O3", "-ffp-contract=off"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
