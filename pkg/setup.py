"""Build script for the compiled inversion-counting kernel.

The package works without the extension (a NumPy fallback is selected at
import time), but the compiled kernel is what makes large evolution runs
fast, so the build treats it as required.
"""

from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = [
    Extension(
        "zc_evolve._inversions",
        sources=["src/zc_evolve/_inversions.pyx"],
        extra_compile_args=["-O3"],
    ),
]

setup(ext_modules=cythonize(extensions, language_level=3))
