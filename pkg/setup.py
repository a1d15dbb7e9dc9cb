"""Build the optional compiled kernel extension.

The package works without it (a pure-Python twin is selected at
import); any compiler or Cython failure therefore degrades to a warning
instead of breaking the install.
"""

import os
import sys

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # missing compiler and friends
            print(f"warning: compiled kernels skipped ({exc}); "
                  "falling back to the pure-Python backend", file=sys.stderr)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"warning: building {ext.name} failed ({exc}); "
                  "falling back to the pure-Python backend", file=sys.stderr)


ext_modules = []
if not os.environ.get("REMATCH_PURE_PYTHON"):
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [Extension(
                "rematch._core_cy",
                ["src/rematch/_core_cy.pyx"],
                language="c++",
                extra_compile_args=["-O2", "-std=c++17"],
            )],
            language_level=3,
        )
    except ImportError:
        print("warning: Cython unavailable; using the pure-Python backend",
              file=sys.stderr)

setup(ext_modules=ext_modules, cmdclass={"build_ext": optional_build_ext})
