"""Closed-form potential families.

All families evaluate pointwise with closed-form values and, except for
the discontinuous ``constant_on_ball``, closed-form gradients, so that
divergence/curl of vector potentials and the decay constants entering
the admissibility checks are computable without numerical
differentiation.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

GAUSSIAN_BUMP = "gaussian_bump"
POLYNOMIAL_DECAY = "polynomial_decay"
COMPACT_BUMP = "compact_bump"
CONSTANT_ON_BALL = "constant_on_ball"

FAMILIES = (GAUSSIAN_BUMP, POLYNOMIAL_DECAY, COMPACT_BUMP, CONSTANT_ON_BALL)


class PotentialError(ValueError):
    """Raised for invalid potential parameters or unsupported queries."""


@dataclass(frozen=True)
class ScalarPotential:
    """A scalar potential ``amplitude * profile(|x - center| ...)``.

    Profiles (unit amplitude):
      gaussian_bump     exp(-|x-c|^2 / width^2)
      polynomial_decay  (1 + |x-c|^2)^(-decay/2), decay > 0
      compact_bump      exp(-t^2/(1-t^2)) for t = |x-c|/width < 1, else 0
      constant_on_ball  indicator of |x-c| <= width
    """

    family: str
    amplitude: complex
    center: tuple
    width: float = 1.0
    decay: float = 1.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise PotentialError(f"unknown potential family {self.family!r}")
        if self.family == POLYNOMIAL_DECAY and self.decay <= 0:
            raise PotentialError("polynomial_decay requires decay > 0")
        if self.family in (GAUSSIAN_BUMP, COMPACT_BUMP, CONSTANT_ON_BALL):
            if self.width <= 0:
                raise PotentialError("width must be positive")

    @property
    def dim(self) -> int:
        return len(self.center)

    @property
    def is_real(self) -> bool:
        return complex(self.amplitude).imag == 0.0

    def has_gradient(self) -> bool:
        return self.family != CONSTANT_ON_BALL

    def _offsets(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.shape[1] != self.dim:
            raise PotentialError(
                f"points have dimension {pts.shape[1]}, potential has {self.dim}"
            )
        return pts - np.asarray(self.center, float)

    def value(self, pts: np.ndarray) -> np.ndarray:
        d = self._offsets(pts)
        r2 = np.sum(d**2, axis=1)
        if self.family == GAUSSIAN_BUMP:
            profile = np.exp(-r2 / self.width**2)
        elif self.family == POLYNOMIAL_DECAY:
            profile = (1.0 + r2) ** (-0.5 * self.decay)
        elif self.family == COMPACT_BUMP:
            t2 = r2 / self.width**2
            inside = t2 < 1.0
            profile = np.zeros_like(r2)
            ti = t2[inside]
            profile[inside] = np.exp(-ti / (1.0 - ti))
        else:
            profile = (r2 <= self.width**2).astype(float)
        return self.amplitude * profile

    def gradient(self, pts: np.ndarray) -> np.ndarray:
        """Closed-form gradient, shape (npts, dim)."""
        if not self.has_gradient():
            raise PotentialError(
                f"{self.family} has no closed-form gradient"
            )
        d = self._offsets(pts)
        r2 = np.sum(d**2, axis=1)
        if self.family == GAUSSIAN_BUMP:
            radial = np.exp(-r2 / self.width**2) * (-2.0 / self.width**2)
        elif self.family == POLYNOMIAL_DECAY:
            radial = -self.decay * (1.0 + r2) ** (-0.5 * self.decay - 1.0)
        else:  # compact bump
            t2 = r2 / self.width**2
            inside = t2 < 1.0
            radial = np.zeros_like(r2)
            ti = t2[inside]
            radial[inside] = (
                np.exp(-ti / (1.0 - ti)) * (-2.0 / (self.width**2 * (1.0 - ti) ** 2))
            )
        return self.amplitude * radial[:, None] * d

    def scaled(self, factor: complex) -> "ScalarPotential":
        return dataclasses.replace(self, amplitude=self.amplitude * factor)


def zero_potential(dim: int) -> ScalarPotential:
    return ScalarPotential(GAUSSIAN_BUMP, 0.0, (0.0,) * dim)


@dataclass(frozen=True)
class VectorPotential:
    """A vector potential with one closed-form scalar component per axis."""

    components: tuple

    def __post_init__(self):
        if len(self.components) == 0:
            raise PotentialError("vector potential needs at least one component")
        dims = {c.dim for c in self.components}
        if dims != {len(self.components)}:
            raise PotentialError("component centers must match the spatial dimension")

    @property
    def dim(self) -> int:
        return len(self.components)

    @property
    def is_real(self) -> bool:
        return all(c.is_real for c in self.components)

    def has_divergence(self) -> bool:
        return all(c.has_gradient() for c in self.components)

    def value(self, pts: np.ndarray) -> np.ndarray:
        return np.column_stack([c.value(pts) for c in self.components])

    def divergence(self, pts: np.ndarray) -> np.ndarray:
        if not self.has_divergence():
            raise PotentialError("vector potential has no closed-form divergence")
        out = 0.0
        for axis, comp in enumerate(self.components):
            out = out + comp.gradient(pts)[:, axis]
        return out

    def curl_2d(self, pts: np.ndarray) -> np.ndarray:
        """The scalar curl d1 A^2 - d2 A^1 (n = 2 only)."""
        if self.dim != 2:
            raise PotentialError("curl_2d requires a 2D vector potential")
        if not self.has_divergence():
            raise PotentialError("vector potential has no closed-form derivatives")
        return self.components[1].gradient(pts)[:, 0] - self.components[0].gradient(
            pts
        )[:, 1]

    def scaled(self, factor: complex) -> "VectorPotential":
        return VectorPotential(tuple(c.scaled(factor) for c in self.components))


def directional_vector_potential(
    profile: ScalarPotential, direction: tuple
) -> VectorPotential:
    """Vector potential ``direction * profile(x)`` (per-component amplitudes)."""
    if len(direction) != profile.dim:
        raise PotentialError("direction length must match profile dimension")
    comps = tuple(profile.scaled(complex(d)) for d in direction)
    return VectorPotential(comps)
