import numpy
from setuptools import Extension, setup
from Cython.Build import cythonize

# The extension is optional: if the toolchain is missing the install still
# succeeds and the package falls back to the numpy kernels at import time.
setup(
    ext_modules=cythonize(
        [
            Extension(
                "bslqb._ckernels",
                ["src/bslqb/_ckernels.pyx"],
                extra_compile_args=["-O3"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                optional=True,
            )
        ],
        language_level=3,
    )
)
