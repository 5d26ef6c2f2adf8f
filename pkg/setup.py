"""Build script: compiles the optional Cython kernel extension.

The package works without the extension (a NumPy fallback is selected at
import time), so any build failure here is tolerated.
"""

import numpy
from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/tilecodes/_kernels/_fastimpl.pyx"],
        compiler_directives={"language_level": "3"},
    )
except Exception as exc:  # pragma: no cover - build environment dependent
    print(f"skipping compiled kernels: {exc}")

setup(
    ext_modules=ext_modules,
    include_dirs=[numpy.get_include()],
)
