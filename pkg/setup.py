"""Builds the optional compiled kernel; the package works without it."""

import os

from setuptools import setup

ext_modules = []
if os.environ.get("BNP_AUDIT_NO_EXT", "") != "1":
    try:
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        print("Cython not available: installing the pure-Python kernel only")
    else:
        ext_modules = cythonize(
            [Extension("bnp_audit._ckernel", ["src/bnp_audit/_ckernel.pyx"], extra_compile_args=["-O3"], optional=True)],
            compiler_directives={"language_level": "3"},
            quiet=True,
        )

setup(ext_modules=ext_modules)
