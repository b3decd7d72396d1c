"""Build script for the optional Cython kernels.

The extension is best effort: when Cython or a C compiler is missing the
package installs without it and ``emotrans.kernels`` falls back to numpy.

    pip install -e . --no-build-isolation
    python setup.py build_ext --inplace
"""
import os

from setuptools import setup

ext_modules = []
if not os.environ.get("EMOTRANS_NO_EXT"):
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "emotrans._kernels",
                    ["src/emotrans/_kernels.pyx"],
                    include_dirs=[np.get_include()],
                    # bit-identical float results with the numpy fallback
                    extra_compile_args=["-O3", "-ffp-contract=off"],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            compiler_directives={
                "language_level": "3",
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
                "initializedcheck": False,
            },
        )

setup(ext_modules=ext_modules)
