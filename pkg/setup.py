import sys

from setuptools import Extension, setup

# The compiled kernel is an optimization only: skylink.kernels falls back to
# the pure-numpy implementation whenever the extension is missing.
ext_modules = []
try:
    from Cython.Build import cythonize

    ext = Extension(
        "skylink.kernels._clos",
        ["src/skylink/kernels/_clos.pyx"],
        # fp-contract off: the fallback must produce bit-identical booleans.
        extra_compile_args=["-O3", "-ffp-contract=off"],
    )
    ext_modules = cythonize([ext], language_level=3)
except ImportError:
    print("Cython not found; building without the compiled LoS kernel", file=sys.stderr)

setup(ext_modules=ext_modules)
