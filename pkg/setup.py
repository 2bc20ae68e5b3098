import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("BOLTZLAB_NO_EXT", "") in ("", "0"):
    try:
        import numpy as np
        from Cython.Build import cythonize
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "boltzlab._ckernel",
                    ["src/boltzlab/_ckernel.pyx"],
                    include_dirs=[np.get_include()],
                    # results must match the Python fallback bit for bit: no fast-math, no FMA
                    # contraction, and no cos/sin -> sincos fusion (glibc sincos differs by an ulp)
                    extra_compile_args=[
                        "-O2",
                        "-ffp-contract=off",
                        "-fno-builtin-cos",
                        "-fno-builtin-sin",
                        "-fno-builtin-pow",
                    ],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
