"""Build script: compiles the optional fast kernels.

The package works without the extension (a numpy fallback is selected at
import time), so a failed compile only costs speed, not functionality.
"""

import sys

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "sparselut._fastcore",
                sources=["src/sparselut/_fastcore.pyx"],
                include_dirs=[numpy.get_include()],
                # -ffp-contract=off keeps float results bit-identical to the
                # numpy fallback (no FMA contraction).
                extra_compile_args=["-O3", "-ffp-contract=off"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError as exc:
    print(f"sparselut: Cython/numpy unavailable ({exc}); building pure-python only",
          file=sys.stderr)

setup(ext_modules=ext_modules)
