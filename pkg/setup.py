"""Build script for the compiled statevector kernels.

The extension is optional at runtime: if it is absent the package falls
back to the pure-NumPy kernels in ``qbernoulli._kernels_np``.
"""

import numpy
from setuptools import Extension, setup
from Cython.Build import cythonize

extensions = [
    Extension(
        "qbernoulli._kernels_cy",
        ["src/qbernoulli/_kernels_cy.pyx"],
        include_dirs=[numpy.get_include()],
        extra_compile_args=["-O3", "-march=native", "-fcx-limited-range"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
]

setup(ext_modules=cythonize(extensions, language_level=3))
