"""Build the optional compiled tape evaluator.

If Cython or a C compiler is missing the package still installs and the
pure-Python evaluator is used.
"""
import os

from setuptools import setup

ext_modules = []
if os.environ.get("CARTAN_DUAL_NO_EXT") != "1":
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "cartan_dual.symexpr._tape_kernel",
                    ["src/cartan_dual/symexpr/_tape_kernel.pyx"],
                    include_dirs=[numpy.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
