import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("GIR_NO_EXTENSION", "") in ("", "0"):
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "gir._kernels",
                ["src/gir/_kernels.pyx"],
                # no FMA contraction: scores must match the Python backend bit for bit
                extra_compile_args=["-O2", "-ffp-contract=off"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
