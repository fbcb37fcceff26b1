"""Build script: compiles the QR kernel extension when Cython is available.

The package works without the extension (a pure-numpy twin is selected
at import time), so any build failure here degrades to the fallback
instead of breaking the install.
"""

from setuptools import setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "spectral_lab._kernels._qr_cy",
                ["src/spectral_lab/_kernels/_qr_cy.pyx"],
                include_dirs=[np.get_include()],
            )
        ],
        language_level=3,
    )
except Exception as exc:  # pragma: no cover - build-environment dependent
    print(f"spectral-lab: building without compiled kernel ({exc})")

setup(ext_modules=ext_modules)
