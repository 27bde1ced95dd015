"""Build the optional compiled Sturm kernel; the package works without it."""
import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [Extension("wkbresum._sturm", ["src/wkbresum/_sturm.pyx"], include_dirs=[np.get_include()])],
        language_level=3,
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
