"""Builds the optional compiled stepping kernel.

The package works without it: crawlsim.engine falls back to the pure-Python
kernel when the extension is missing. Build in place with

    python setup.py build_ext --inplace
"""

from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/crawlsim/_stepper_c.pyx"],
        language_level=3,
    )
    # Keep float arithmetic bit-identical to the pure-Python kernel:
    # fused multiply-add contraction would change results.
    for ext in ext_modules:
        ext.extra_compile_args = ["-O2", "-ffp-contract=off"]
except ImportError:
    pass

setup(ext_modules=ext_modules)
