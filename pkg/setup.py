"""Build glue for the optional compiled kernel.

The package works without the extension (a pure-Python fallback is selected
at import time); when Cython and a C compiler are available the hot kernels
(combinational settle, annealing loop) are compiled.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [Extension("fluidc._kernels._core", ["src/fluidc/_kernels/_core.pyx"])],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
