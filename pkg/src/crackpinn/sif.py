"""Stress intensity factors from crack-opening displacements.

Estimates K*(r) are taken from the displacement jump across the two crack
faces at distance r behind a tip, then a straight line K*(r) = K + c r is
fitted over a window of r and its intercept is reported (displacement
extrapolation).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kinematics import EnrichedModel, side_sign

DEFAULT_WINDOW = (0.05, 0.30)
DEFAULT_SAMPLES = 12


class OffCrackError(ValueError):
    pass


class InsufficientSamplesError(ValueError):
    pass


@dataclass(frozen=True)
class KStarSample:
    r: float
    k1_star: float
    k2_star: float


def face_subdomains(model: EnrichedModel, tip_index):
    """Subdomains seeing the tip's faces at theta=+pi and theta=-pi."""
    tip = model.tips[tip_index]
    if not model.subdomains:
        return None, None
    up = lo = None
    for k, sd in enumerate(model.subdomains):
        s = side_sign(tip, sd.side_normal)
        if s > 0 and up is None:
            up = k
        elif s < 0 and lo is None:
            lo = k
    if up is None or lo is None:
        raise OffCrackError("model has no subdomain pair straddling this crack")
    return up, lo


def crack_opening(model: EnrichedModel, tip_index, r, face_length=None):
    """Displacement jump (upper minus lower face) in the tip frame at distance r."""
    tip = model.tips[tip_index]
    if r <= 0:
        raise OffCrackError("r must be positive")
    if face_length is not None and r > face_length * (1 + 1e-12):
        raise OffCrackError(f"r = {r} exceeds the crack-face length {face_length}")
    x = np.asarray(tip.position) - r * tip.ahead
    up, lo = face_subdomains(model, tip_index)
    if up is None:
        u_up = model.displacement(x[None], side=1)[0]
        u_lo = model.displacement(x[None], side=-1)[0]
    else:
        for k in (up, lo):
            if not model.subdomains[k].contains(x[None], strict=False)[0]:
                raise OffCrackError(f"point {tuple(x)} at r = {r} is not on the crack faces")
        u_up = model.displacement(x[None], subdomain=up)[0]
        u_lo = model.displacement(x[None], subdomain=lo)[0]
    rot = tip.rotation()
    return rot.T @ (u_up - u_lo)


def cod_sif(model: EnrichedModel, tip_index, r, face_length=None):
    """K* estimates for both modes from the opening at distance r."""
    du = crack_opening(model, tip_index, r, face_length)
    mu, kappa = model.material.mu, model.material.kappa
    scale = mu / (kappa + 1.0) * np.sqrt(2.0 * np.pi / r)
    return KStarSample(float(r), float(scale * du[1]), float(scale * du[0]))


def kstar_curve(model, tip_index, crack_length, window=DEFAULT_WINDOW, n=DEFAULT_SAMPLES, face_length=None):
    radii = np.linspace(window[0], window[1], n) * crack_length
    return [cod_sif(model, tip_index, r, face_length) for r in radii]


def extrapolate_sif(samples, window=DEFAULT_WINDOW, crack_length=1.0):
    """Least-squares line through K*(r) over ``window`` (fractions of a); intercepts."""
    lo, hi = window
    eps = 1e-12
    pts = [s for s in samples if lo - eps <= s.r / crack_length <= hi + eps]
    if len(pts) < 4:
        raise InsufficientSamplesError(f"need at least 4 samples in the window, got {len(pts)}")
    r = np.array([s.r for s in pts])
    a = np.column_stack([np.ones_like(r), r])
    y = np.column_stack([[s.k1_star for s in pts], [s.k2_star for s in pts]])
    coef, *_ = np.linalg.lstsq(a, y, rcond=None)
    return float(coef[0, 0]), float(coef[0, 1])


def dem_sif(model, tip_index, crack_length, window=DEFAULT_WINDOW, n=DEFAULT_SAMPLES, face_length=None):
    """Extrapolated (K_I, K_II) plus the K* samples they came from."""
    samples = kstar_curve(model, tip_index, crack_length, window, n, face_length)
    k1, k2 = extrapolate_sif(samples, window, crack_length)
    return k1, k2, samples


def ktilde_to_k(ktilde, mu):
    """Physical SIF carried by an enrichment coefficient."""
    return 2.0 * mu * np.sqrt(2.0 * np.pi) * ktilde


def k_to_ktilde(k, mu):
    return k / (2.0 * mu * np.sqrt(2.0 * np.pi))
