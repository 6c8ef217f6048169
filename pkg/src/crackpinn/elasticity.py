"""Isotropic 2D elasticity: Hooke's law, tractions, Navier residuals and the
leading-order near-tip (Williams) fields."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .autodiff import D1, D2, H11, H12, H22, SpatialJet


class Assumption(str, enum.Enum):
    PLANE_STRAIN = "plane_strain"
    PLANE_STRESS = "plane_stress"


class MaterialError(ValueError):
    pass


@dataclass(frozen=True)
class Material:
    youngs_modulus: float = 1.0
    poisson_ratio: float = 0.3
    assumption: Assumption = Assumption.PLANE_STRAIN

    def __post_init__(self):
        object.__setattr__(self, "assumption", Assumption(self.assumption))
        if not self.youngs_modulus > 0:
            raise MaterialError(f"youngs_modulus must be positive, got {self.youngs_modulus}")
        if not 0.0 <= self.poisson_ratio < 0.5:
            raise MaterialError(f"poisson_ratio out of range [0, 0.5): {self.poisson_ratio}")

    @property
    def mu(self):
        return self.youngs_modulus / (2.0 * (1.0 + self.poisson_ratio))

    @property
    def kappa(self):
        nu = self.poisson_ratio
        if self.assumption is Assumption.PLANE_STRAIN:
            return 3.0 - 4.0 * nu
        return (3.0 - nu) / (1.0 + nu)

    @property
    def effective_poisson(self):
        """Ratio entering the plane-strain form of Hooke's law.

        Plane stress reuses the plane-strain equations with nu/(1+nu).
        """
        nu = self.poisson_ratio
        if self.assumption is Assumption.PLANE_STRAIN:
            return nu
        return nu / (1.0 + nu)

    @property
    def lame_ratio(self):
        nu = self.effective_poisson
        return nu / (1.0 - 2.0 * nu)

    def to_dict(self):
        return {
            "youngs_modulus": self.youngs_modulus,
            "poisson_ratio": self.poisson_ratio,
            "assumption": self.assumption.value,
        }


@dataclass(frozen=True)
class StressState:
    s11: np.ndarray | float
    s22: np.ndarray | float
    s12: np.ndarray | float

    @property
    def s21(self):
        return self.s12

    def as_array(self):
        return np.array([self.s11, self.s22, self.s12])


def strain_from_gradient(du):
    """Small strains (e11, e22, e12) from the displacement gradient du[i][j] = du_i/dx_j."""
    du = np.asarray(du, dtype=float)
    return du[0, 0], du[1, 1], 0.5 * (du[0, 1] + du[1, 0])


def stress_from_strain(eps, material: Material):
    e11, e22, e12 = eps
    mu, lam = material.mu, material.lame_ratio
    tr = e11 + e22
    return StressState(2.0 * mu * (e11 + lam * tr), 2.0 * mu * (e22 + lam * tr), 2.0 * mu * e12)


class NonUnitNormalError(ValueError):
    pass


def traction(sigma: StressState, n):
    n = np.asarray(n, dtype=float)
    norm = np.sqrt(n[0] ** 2 + n[1] ** 2)
    if np.any(np.abs(norm - 1.0) > 1e-12):
        raise NonUnitNormalError(f"normal must have unit length, |n| = {norm}")
    return sigma.s11 * n[0] + sigma.s12 * n[1], sigma.s12 * n[0] + sigma.s22 * n[1]


def stress_from_jets(u, material: Material):
    """Stresses at every point of a displacement jet array (6, N, 2)."""
    e11 = u[D1, :, 0]
    e22 = u[D2, :, 1]
    e12 = 0.5 * (u[D2, :, 0] + u[D1, :, 1])
    return stress_from_strain((e11, e22, e12), material)


def navier_residual_jets(u, material: Material, body_force=(0.0, 0.0)):
    """Navier residuals (R1, R2) for a jet array of shape (6, N, 2)."""
    mu, lam = material.mu, material.lame_ratio
    c = mu / (1.0 - 2.0 * material.effective_poisson)
    r1 = mu * (u[H11, :, 0] + u[H22, :, 0]) + c * (u[H11, :, 0] + u[H12, :, 1]) + body_force[0]
    r2 = mu * (u[H11, :, 1] + u[H22, :, 1]) + c * (u[H22, :, 1] + u[H12, :, 0]) + body_force[1]
    return r1, r2


def navier_residual(jet1: SpatialJet, jet2: SpatialJet, material: Material, body_force=(0.0, 0.0)):
    """Pointwise equilibrium residual; zero iff div(sigma) + f = 0."""
    mu = material.mu
    c = mu / (1.0 - 2.0 * material.effective_poisson)
    h1, h2 = jet1.hess, jet2.hess
    r1 = mu * (h1[0, 0] + h1[1, 1]) + c * (h1[0, 0] + h2[0, 1]) + body_force[0]
    r2 = mu * (h2[0, 0] + h2[1, 1]) + c * (h2[1, 1] + h1[0, 1]) + body_force[1]
    return r1, r2


def williams_displacement(k1, k2, r, theta, mu, kappa):
    """Leading-order near-tip displacements in the tip frame (mode I + mode II).

    The mode-II opening term carries a minus sign, -cos(theta/2)(kappa - 2 + cos theta);
    without it the field is neither in equilibrium nor consistent with the
    mode-II stresses.
    """
    r = np.asarray(r, dtype=float)
    theta = np.asarray(theta, dtype=float)
    pre = np.sqrt(r / (2.0 * np.pi)) / (2.0 * mu)
    c, ch, sh = np.cos(theta), np.cos(theta / 2.0), np.sin(theta / 2.0)
    u1 = pre * (k1 * (kappa - c) * ch + k2 * sh * (kappa + 2.0 + c))
    u2 = pre * (k1 * (kappa - c) * sh - k2 * ch * (kappa - 2.0 + c))
    return u1, u2


def williams_stress(k1, k2, r, theta):
    """Leading-order singular stresses in the tip frame."""
    r = np.asarray(r, dtype=float)
    theta = np.asarray(theta, dtype=float)
    pre = 1.0 / np.sqrt(2.0 * np.pi * r)
    sh, ch = np.sin(theta / 2.0), np.cos(theta / 2.0)
    s3, c3 = np.sin(1.5 * theta), np.cos(1.5 * theta)
    s11 = pre * (k1 * ch * (1.0 - sh * s3) - k2 * sh * (2.0 + ch * c3))
    s22 = pre * (k1 * ch * (1.0 + sh * s3) + k2 * sh * ch * c3)
    s12 = pre * (k1 * ch * sh * c3 + k2 * ch * (1.0 - sh * s3))
    return StressState(s11, s22, s12)
