import numpy
from Cython.Build import cythonize
from setuptools import Extension, setup

ext_modules = cythonize(
    [
        Extension(
            "planarcover._kernels._gridcore",
            ["src/planarcover/_kernels/_gridcore.pyx"],
            include_dirs=[numpy.get_include()],
            # -fno-builtin-sincos: keep separate sin/cos libm calls so the
            # compiled kernel matches the pure-Python one bit for bit
            extra_compile_args=["-O3", "-ffp-contract=off", "-fno-builtin-sincos"],
            define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        )
    ],
    compiler_directives={"language_level": 3},
)

setup(ext_modules=ext_modules)
