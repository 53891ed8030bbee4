import os

import numpy
from setuptools import Extension, setup

# Building the extension is optional: the package falls back to numpy kernels
# when the compiled core is missing.
ext_modules = []
if os.environ.get("MIXCLUST_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext = Extension(
            name="mixclust._core",
            sources=["src/mixclust/_core.pyx"],
            include_dirs=[numpy.get_include()],
            language="c++",
            # no FMA contraction: distances must match the numpy fallback bit for bit
            extra_compile_args=["-O3", "-ffp-contract=off"],
        )
        ext_modules = cythonize(ext, compiler_directives={"language_level": "3"})

setup(ext_modules=ext_modules)
