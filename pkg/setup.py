from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pure-Python install; kernels fall back to numpy
    ext_modules = []
else:
    ext_modules = cythonize(
        [Extension("levelque._kernels", ["src/levelque/_kernels.pyx"], libraries=["m"])],
        compiler_directives={"language_level": 3},
    )

setup(ext_modules=ext_modules)
