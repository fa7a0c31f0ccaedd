"""Builds the optional compiled stepping kernel.

If Cython or a C compiler is unavailable the install still succeeds and the
package falls back to the pure-Python kernel at import time.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "comanip._kernel",
                sources=["src/comanip/_kernel.pyx"],
                # The compiled kernel must round every operation exactly like
                # the pure-Python twin: no FMA contraction, and no fusing of
                # cos/sin pairs into sincos (whose results can differ by 1 ulp
                # from the separate libm calls CPython makes).
                extra_compile_args=[
                    "-O2",
                    "-ffp-contract=off",
                    "-fno-builtin-sincos",
                    "-fno-builtin-sin",
                    "-fno-builtin-cos",
                ],
                optional=True,
            )
        ],
        language_level="3",
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
