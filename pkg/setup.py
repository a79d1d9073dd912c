"""Build script for the compiled propagation core.

The package works without the extension (a pure-Python core is selected at
import time), so a failed compile should not abort installation.
"""

import os

from setuptools import Extension, setup

ext_modules = []
pyx = os.path.join("src", "moongate", "_core.pyx")
if os.path.exists(pyx):
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "moongate._core",
                    [pyx],
                    extra_compile_args=["-O3"],
                )
            ],
            language_level=3,
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
