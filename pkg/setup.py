import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
    ext_modules = cythonize(
        [
            Extension(
                "hopground.retrieval._bm25_kernel",
                ["src/hopground/retrieval/_bm25_kernel.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except ImportError:
    # no Cython toolchain: install with the pure-Python scoring fallback
    ext_modules = []

setup(ext_modules=ext_modules)
