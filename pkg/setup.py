"""Build script for the optional compiled accelerator.

The package is fully functional without the extension: steinflow._backend
falls back to the pure-numpy implementation when steinflow._accel is not
importable.  Build failures (missing compiler, missing Cython) therefore
only cost speed, never functionality.
"""

import warnings

from setuptools import setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Treat extension build failures as a warning, not an error."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing, etc.
            warnings.warn(f"building the steinflow accelerator failed ({exc}); "
                          "falling back to the pure-numpy backend")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            warnings.warn(f"building {ext.name} failed ({exc}); "
                          "falling back to the pure-numpy backend")


def _extensions():
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        return []
    ext = Extension(
        "steinflow._accel",
        ["src/steinflow/_accel.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=["-O3"],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


setup(ext_modules=_extensions(), cmdclass={"build_ext": OptionalBuildExt})
