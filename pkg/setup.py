"""Build script for the optional compiled stepping kernel.

The package works without the extension: ``pursuitlab._backend`` falls back
to the vectorised NumPy kernel when ``pursuitlab._stepcore`` is missing.
Compilation failures therefore degrade the install instead of breaking it.

``-ffp-contract=off`` keeps the compiler from fusing multiply-adds so the
compiled kernel and the NumPy fallback produce bit-identical trajectories.
"""

import sys

import numpy as np
from setuptools import setup
from setuptools.command.build_ext import build_ext
from setuptools.extension import Extension

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None


class optional_build_ext(build_ext):
    """Build the extension if possible, warn and continue if not."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # toolchain missing, etc.
            self._warn(exc)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            self._warn(exc)

    @staticmethod
    def _warn(exc):
        print(
            "WARNING: building the compiled stepping kernel failed; "
            "the pure NumPy fallback will be used.\n  %s" % exc,
            file=sys.stderr,
        )


ext_modules = []
if cythonize is not None:
    ext_modules = cythonize(
        [
            Extension(
                "pursuitlab._stepcore",
                ["src/pursuitlab/_stepcore.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3", "-ffp-contract=off"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules, cmdclass={"build_ext": optional_build_ext})
