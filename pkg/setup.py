"""Build script: compiles the optional Cython stencil core.

The package works without the extension (a NumPy fallback is selected at
import time), so a failed compile only emits a warning.
"""

import warnings

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Build the stencil extension if possible, warn and continue if not."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # pragma: no cover - toolchain dependent
            warnings.warn(f"stencil extension build skipped: {exc}")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # pragma: no cover - toolchain dependent
            warnings.warn(f"stencil extension build skipped: {exc}")


def make_ext_modules():
    try:
        import numpy as np
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "chemopm.kernels._stencil",
        ["src/chemopm/kernels/_stencil.pyx"],
        include_dirs=[np.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize([ext], language_level="3")


setup(ext_modules=make_ext_modules(), cmdclass={"build_ext": OptionalBuildExt})
