import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("WSSKIT_NO_EXT"):
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "wsskit._kernels._core",
                    ["src/wsskit/_kernels/_core.pyx"],
                    optional=True,
                )
            ],
            compiler_directives={
                "language_level": 3,
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
            },
        )
    except ImportError:
        # No Cython: the pure-Python kernels are used instead.
        ext_modules = []

setup(ext_modules=ext_modules)
