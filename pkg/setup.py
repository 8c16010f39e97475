import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

extensions = [
    Extension(
        "goft._kernels",
        ["src/goft/_kernels.pyx"],
        include_dirs=[np.get_include()],
        # fp-contract off keeps the compiled forward bit-identical to the
        # numpy fallback
        extra_compile_args=["-O3", "-ffp-contract=off"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
]

setup(
    ext_modules=cythonize(extensions, compiler_directives={"language_level": "3"})
    if cythonize is not None
    else [],
)
