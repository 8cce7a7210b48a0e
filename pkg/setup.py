import sys

import numpy as np
from setuptools import Extension, setup

# The compiled core is optional: if Cython or a C compiler is missing the
# package falls back to the pure-numpy kernels at import time.
ext_modules = []
try:
    from Cython.Build import cythonize

    extra = ["-O3"]
    if sys.platform.startswith("linux"):
        # hardware half-precision conversion (guarded by __F16C__ in the C source)
        extra.append("-mf16c")
    ext_modules = cythonize(
        [
            Extension(
                "ofrr._kernels",
                sources=["src/ofrr/_kernels.pyx"],
                include_dirs=[np.get_include(), "src/ofrr"],
                extra_compile_args=extra,
            )
        ],
        language_level=3,
    )
except ImportError:
    print("warning: Cython not available, building without compiled kernels")

setup(ext_modules=ext_modules)
