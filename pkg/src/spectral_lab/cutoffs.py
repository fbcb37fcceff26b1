"""Smooth cutoff functions built from the exp(-1/t) partition.

The escape-function construction only pins supports and monotonicity of
its cutoffs; the concrete bump used here is fixed once so results are
reproducible.  The same machinery provides the plateau windows used for
phase-space bulk restriction of quantized operators.
"""

from __future__ import annotations

import numpy as np

_TINY = 1e-300


def _bump(t: np.ndarray) -> np.ndarray:
    """exp(-1/t) for t > 0, 0 otherwise (C-infinity at 0)."""
    t = np.asarray(t, float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / np.maximum(t[pos], _TINY))
    return out


def _bump_deriv(t: np.ndarray) -> np.ndarray:
    t = np.asarray(t, float)
    out = np.zeros_like(t)
    pos = t > 1e-8  # below this exp(-1/t) underflows anyway
    tp = t[pos]
    out[pos] = np.exp(-1.0 / tp) / tp**2
    return out


def smooth_step(t: np.ndarray) -> np.ndarray:
    """Monotone C-infinity step: 0 for t <= 0, 1 for t >= 1."""
    a = _bump(t)
    b = _bump(1.0 - np.asarray(t, float))
    return a / (a + b + (a + b == 0.0))


def smooth_step_deriv(t: np.ndarray) -> np.ndarray:
    t = np.asarray(t, float)
    a = _bump(t)
    b = _bump(1.0 - t)
    da = _bump_deriv(t)
    db = _bump_deriv(1.0 - t)
    denom = (a + b) ** 2
    denom = denom + (denom == 0.0)
    return (da * b + a * db) / denom


def psi(t: np.ndarray) -> np.ndarray:
    """Cutoff with supp in [1/4, inf), equal to 1 on [1/2, inf), psi' >= 0."""
    return smooth_step(4.0 * np.asarray(t, float) - 1.0)


def psi_deriv(t: np.ndarray) -> np.ndarray:
    return 4.0 * smooth_step_deriv(4.0 * np.asarray(t, float) - 1.0)


def chi(t: np.ndarray) -> np.ndarray:
    """Cutoff with supp in (-inf, 1], equal to 1 on (-inf, 1/2]."""
    return 1.0 - smooth_step(2.0 * np.asarray(t, float) - 1.0)


def chi_deriv(t: np.ndarray) -> np.ndarray:
    return -2.0 * smooth_step_deriv(2.0 * np.asarray(t, float) - 1.0)


def plateau_window(u: np.ndarray, inner: float, outer: float) -> np.ndarray:
    """Even window: 1 on |u| <= inner, rolls smoothly to 0 at |u| >= outer."""
    if not 0.0 < inner < outer:
        raise ValueError("need 0 < inner < outer")
    s = (np.abs(np.asarray(u, float)) - inner) / (outer - inner)
    return 1.0 - smooth_step(s)
