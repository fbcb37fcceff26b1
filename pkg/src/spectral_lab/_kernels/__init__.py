"""Backend selection for the QR eigensolver hot kernel.

The compiled Cython kernel is preferred when importable; otherwise the
pure-numpy twin takes over.  ``SPECTRAL_LAB_BACKEND`` overrides the
choice: ``auto`` (default), ``cython`` (fail if missing), ``python``.
"""

from __future__ import annotations

import os

from .common import hessenberg  # noqa: F401  (re-exported)


def _load_backend():
    choice = os.environ.get("SPECTRAL_LAB_BACKEND", "auto").lower()
    if choice not in ("auto", "cython", "python"):
        raise ValueError(f"SPECTRAL_LAB_BACKEND must be auto|cython|python, got {choice!r}")
    if choice in ("auto", "cython"):
        try:
            from . import _qr_cy

            return _qr_cy, "cython"
        except ImportError:
            if choice == "cython":
                raise
    from . import pyqr

    return pyqr, "python"


_backend_module, BACKEND_NAME = _load_backend()

qr_hessenberg_eigvals = _backend_module.qr_hessenberg_eigvals
QRConvergenceError = _backend_module.QRConvergenceError


def get_backend(name: str):
    """Explicit backend lookup (used by the benchmark)."""
    if name == "python":
        from . import pyqr

        return pyqr
    if name == "cython":
        from . import _qr_cy

        return _qr_cy
    raise ValueError(f"unknown backend {name!r}")
