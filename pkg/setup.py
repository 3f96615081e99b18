"""Build script: compiles the optional native kernel extension.

The package works without the extension (a pure-Python fallback is selected
at import time); the extension only accelerates the hot per-token kernels.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "edgespec.kernels._native",
                sources=["src/edgespec/kernels/_native.pyx"],
            )
        ],
        language_level=3,
        compiler_directives={
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
except ImportError:
    # No Cython available: install pure-Python only.
    pass

setup(ext_modules=ext_modules)
