"""Build script for the optional compiled kernel extension.

The extension is a strict mirror of ``rightofway._reference``; the package
works without it (set RIGHTOFWAY_PURE=1 to force the fallback at runtime).
Compiled with -O2 and -ffp-contract=off, and without -ffast-math, so that
both backends produce bit-identical floating point results.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pragma: no cover - source install without Cython
    cythonize = None

ext_modules = []
if cythonize is not None:
    ext_modules = cythonize(
        [
            Extension(
                "rightofway._speedups",
                ["src/rightofway/_speedups.pyx"],
                extra_compile_args=["-O2", "-ffp-contract=off"],
            )
        ],
        compiler_directives={"language_level": 3},
    )

setup(ext_modules=ext_modules)
