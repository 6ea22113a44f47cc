"""One-body reduced density matrix of a two-mode boson system.

For two modes the 1-RDM is fixed by the particle number and the collective
spin vector ``gamma_a = <J_a>``, which lies in the ball of radius ``N/2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fock import AXES, StateVector, apply_angular


class RepresentabilityError(ValueError):
    """A 1-RDM outside the Bloch ball of radius N/2."""


def _repr_tol(n_particles: int) -> float:
    # absolute 1e-12 for small N, relative for large N where <J> carries N-sized roundoff
    return 1e-12 * max(1.0, n_particles / 2.0)


@dataclass(frozen=True)
class OneBodyRDM:
    n_particles: int
    gamma_x: float
    gamma_y: float
    gamma_z: float

    def __post_init__(self):
        for name in ("gamma_x", "gamma_y", "gamma_z"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if self.n_particles < 0:
            raise ValueError("negative particle number")
        if self.gamma_rho > self.n_particles / 2.0 + _repr_tol(self.n_particles):
            raise RepresentabilityError(
                f"|gamma| = {self.gamma_rho!r} exceeds N/2 = {self.n_particles / 2.0!r}"
            )

    @classmethod
    def from_vector(cls, n_particles: int, vec) -> "OneBodyRDM":
        x, y, z = (float(v) for v in vec)
        return cls(n_particles, x, y, z)

    @classmethod
    def from_spherical(cls, n_particles: int, gamma_rho: float, theta: float, phi: float) -> "OneBodyRDM":
        st = math.sin(theta)
        return cls(
            n_particles,
            gamma_rho * st * math.cos(phi),
            gamma_rho * st * math.sin(phi),
            gamma_rho * math.cos(theta),
        )

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.gamma_x, self.gamma_y, self.gamma_z])

    @property
    def gamma_rho(self) -> float:
        return math.sqrt(self.gamma_x**2 + self.gamma_y**2 + self.gamma_z**2)

    @property
    def theta(self) -> float:
        r = self.gamma_rho
        if r == 0.0:
            return 0.0
        return math.acos(max(-1.0, min(1.0, self.gamma_z / r)))

    @property
    def phi(self) -> float:
        if self.gamma_x == 0.0 and self.gamma_y == 0.0:
            return 0.0
        p = math.atan2(self.gamma_y, self.gamma_x)
        return p + 2 * math.pi if p < 0 else p

    @property
    def depletion(self) -> float:
        return self.n_particles / 2.0 - self.gamma_rho

    def spherical(self) -> tuple[float, float, float]:
        return self.gamma_rho, self.theta, self.phi


def spin_vector(amplitudes: np.ndarray) -> np.ndarray:
    """``(<J_x>, <J_y>, <J_z>)`` of a normalized amplitude vector."""
    psi = np.asarray(amplitudes)
    return np.array([np.vdot(psi, apply_angular(psi, a)).real for a in AXES])


def gamma_from_state(state: StateVector) -> OneBodyRDM:
    return OneBodyRDM.from_vector(state.basis.n_particles, spin_vector(state.amplitudes))


def spherical_roundtrip(rdm: OneBodyRDM) -> OneBodyRDM:
    return OneBodyRDM.from_spherical(rdm.n_particles, *rdm.spherical())


def correlation_entropy(rdm: OneBodyRDM) -> float:
    """Von Neumann entropy of the unit-trace 1-RDM, eigenvalues ``1/2 +- gamma_rho/N``."""
    N = rdm.n_particles
    if N == 0:
        return 0.0
    r = min(rdm.gamma_rho / N, 0.5)
    s = 0.0
    for p in (0.5 + r, 0.5 - r):
        if p > 0.0:
            s -= p * math.log(p)
    return s
