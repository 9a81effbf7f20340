"""Build script for the optional compiled simplex kernel.

The package is fully functional without the extension: mfg_lpfp._kernels
falls back to a numpy implementation of the same pivot loop at import time.
Set MFG_LPFP_PURE=1 to skip the extension build entirely.
"""

import os

from setuptools import setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    """Compile the kernel if possible, otherwise install pure-Python."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # missing compiler, broken toolchain
            print(f"warning: compiled kernel skipped ({exc}); using pure-Python fallback")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"warning: {ext.name} skipped ({exc}); using pure-Python fallback")


ext_modules = []
if os.environ.get("MFG_LPFP_PURE") != "1":
    try:
        from Cython.Build import cythonize
        from setuptools.extension import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "mfg_lpfp._kernels._core",
                    ["src/mfg_lpfp/_kernels/_core.pyx"],
                    extra_compile_args=["-O3"],
                )
            ],
            language_level="3",
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules, cmdclass={"build_ext": optional_build_ext})
