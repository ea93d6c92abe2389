"""Build script for the compiled correlation kernel.

The package works without the extension (a numpy fallback is selected at
import time), but the compiled core is what makes full-range offset sweeps
fast, so build failures are loud rather than silently swallowed.
"""

from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = [
    Extension(
        "resync._corr",
        sources=["src/resync/_corr.pyx"],
    )
]

setup(
    ext_modules=cythonize(
        extensions,
        compiler_directives={
            "language_level": 3,
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    ),
)
