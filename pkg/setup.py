from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [Extension("rbcom._ckernels", ["src/rbcom/_ckernels.pyx"], optional=True)],
        language_level="3",
    )

setup(ext_modules=ext_modules)
