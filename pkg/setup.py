"""Build script for the compiled kernel extension.

The extension is optional: if compilation fails the package still installs
and falls back to the pure-numpy kernels at import time (slower, same
results).
"""

import sys

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    """Try to build the extension; degrade to the numpy fallback on failure."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # noqa: BLE001 - any build failure is non-fatal
            print(f"WARNING: compiled kernels not built ({exc}); "
                  "resectsim will use the pure-numpy fallback", file=sys.stderr)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # noqa: BLE001
            print(f"WARNING: building {ext.name} failed ({exc}); "
                  "resectsim will use the pure-numpy fallback", file=sys.stderr)


def make_extensions():
    import numpy as np
    from Cython.Build import cythonize

    ext = Extension(
        "resectsim._kernels._core",
        ["src/resectsim/_kernels/_core.pyx"],
        include_dirs=[np.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        # -ffp-contract=off keeps double arithmetic identical to the numpy
        # fallback (no FMA contraction), so both backends agree bit-for-bit.
        extra_compile_args=["-O3", "-ffp-contract=off"],
    )
    return cythonize([ext], language_level=3)


setup(
    ext_modules=make_extensions(),
    cmdclass={"build_ext": optional_build_ext},
)
