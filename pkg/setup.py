from setuptools import Extension, setup
from Cython.Build import cythonize

ext = Extension(
    "attestgame._core",
    ["src/attestgame/_core.pyx"],
    extra_compile_args=["-O3"],
)

setup(
    ext_modules=cythonize([ext], compiler_directives={"language_level": "3"}),
)
