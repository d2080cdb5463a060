"""Build script for the optional compiled kernels.

The package works without the extension (a pure-Python backend is selected at
import time); building it just makes the Markov-chain sweeps much faster.
"""

import warnings

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    """Degrade to the pure-Python backend if compilation is impossible."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # missing compiler / headers
            warnings.warn(f"compiled kernels skipped: {exc}")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            warnings.warn(f"compiled kernels skipped ({ext.name}): {exc}")


def extensions():
    try:
        import os

        import numpy
        from Cython.Build import cythonize
    except ImportError:
        return []
    npyrandom = os.path.join(os.path.dirname(numpy.__file__), "random", "lib")
    ext = Extension(
        "rarelab.kernels._core",
        sources=["src/rarelab/kernels/_core.pyx"],
        include_dirs=[numpy.get_include()],
        library_dirs=[npyrandom],
        libraries=["npyrandom"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        # -ffp-contract=off keeps the compiled kernels bit-identical with the
        # pure-Python backend (no FMA contraction); do not add -ffast-math.
        extra_compile_args=["-O2", "-ffp-contract=off"],
    )
    return cythonize(
        [ext],
        compiler_directives={
            "language_level": 3,
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )


setup(ext_modules=extensions(), cmdclass={"build_ext": optional_build_ext})
