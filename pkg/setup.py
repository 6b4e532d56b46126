from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = [
    Extension(
        "indevo._kernels._ckernel",
        ["src/indevo/_kernels/_ckernel.pyx"],
        extra_compile_args=["-O3"],
    )
]

setup(
    ext_modules=cythonize(
        extensions,
        compiler_directives={"language_level": "3"},
    )
)
