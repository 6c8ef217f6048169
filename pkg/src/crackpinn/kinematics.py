"""Crack-tip frames, branch-cut aware polar coordinates and the enriched
displacement model (raw network output plus near-tip basis functions)."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .autodiff import D1, D2, H11, H12, H22, N_CHANNELS, VAL, check_finite, network_jets
from .elasticity import Material
from .network import Network


class AtTipError(ValueError):
    pass


class AmbiguousCutError(ValueError):
    pass


class OutsideSubdomainError(ValueError):
    pass


def _normalize_angle(a):
    a = float(np.arctan2(np.sin(a), np.cos(a)))
    return np.pi if a == -np.pi else a


@dataclass(frozen=True)
class CrackTip:
    """A crack tip; ``orientation`` is the direction the crack would grow.

    The faces lie along ``orientation + pi``; that ray is the branch cut of
    the local angle.
    """

    position: tuple
    orientation: float = 0.0
    ktilde_I: float = 0.0
    ktilde_II: float = 0.0
    exclusion_radius: float = 1e-3

    def __post_init__(self):
        object.__setattr__(self, "position", tuple(float(v) for v in self.position))
        object.__setattr__(self, "orientation", _normalize_angle(self.orientation))

    @property
    def ahead(self):
        return np.array([np.cos(self.orientation), np.sin(self.orientation)])

    @property
    def normal(self):
        """Local eta axis (ahead direction rotated by +90 degrees)."""
        return np.array([-np.sin(self.orientation), np.cos(self.orientation)])

    def rotation(self):
        c, s = np.cos(self.orientation), np.sin(self.orientation)
        return np.array([[c, -s], [s, c]])

    def to_dict(self):
        return {
            "position": list(self.position),
            "orientation": self.orientation,
            "ktilde_I": self.ktilde_I,
            "ktilde_II": self.ktilde_II,
            "exclusion_radius": self.exclusion_radius,
        }


def side_sign(tip: CrackTip, side_normal):
    """+1 if a subdomain on ``side_normal``'s side sees this tip's faces at theta=+pi."""
    if side_normal is None:
        return 0
    return 1 if float(np.dot(side_normal, tip.normal)) > 0 else -1


def _local_coords(tip, x):
    d = np.atleast_2d(np.asarray(x, dtype=float)) - np.asarray(tip.position)
    c, s = np.cos(tip.orientation), np.sin(tip.orientation)
    xi = c * d[:, 0] + s * d[:, 1]
    eta = -s * d[:, 0] + c * d[:, 1]
    return xi, eta


def local_polar_array(tip: CrackTip, x, side=0):
    """Vectorised polar coordinates about ``tip``; ``side`` may be scalar or per point."""
    xi, eta = _local_coords(tip, x)
    r = np.hypot(xi, eta)
    if np.any(r < tip.exclusion_radius):
        i = int(np.argmin(r))
        raise AtTipError(f"point {np.atleast_2d(x)[i]} is within {tip.exclusion_radius} of the tip")
    theta = np.arctan2(eta, xi)
    on_cut = (np.abs(eta) <= 1e-12 * np.maximum(r, 1.0)) & (xi < 0)
    if np.any(on_cut):
        side = np.broadcast_to(np.asarray(side), r.shape)
        if np.any(side[on_cut] == 0):
            raise AmbiguousCutError("point behind the tip on the crack line needs an upper/lower side tag")
        theta = np.where(on_cut, np.pi * np.sign(side), theta)
    return r, theta


def local_polar(tip: CrackTip, x, side=0):
    """(r, theta) of a single point, theta in (-pi, pi] from the ahead direction."""
    r, theta = local_polar_array(tip, np.reshape(np.asarray(x, float), (1, 2)), side)
    return float(r[0]), float(theta[0])


def _angular_factors(kappa):
    # each basis component is (k + s*cos(theta)) * trig(theta/2)
    # entries: (k, s, half-angle trig is sine?)
    return (
        ((kappa, -1.0, False), (kappa, -1.0, True)),  # mode I: e1, e2
        ((kappa + 2.0, 1.0, True), (2.0 - kappa, -1.0, False)),  # mode II: e1, e2 (e2 = -(k-2+cos) cos)
    )


def _angular(k, s, use_sin, theta):
    c, sn = np.cos(theta), np.sin(theta)
    a0, a1, a2 = k + s * c, -s * sn, -s * c
    ch, sh = np.cos(0.5 * theta), np.sin(0.5 * theta)
    if use_sin:
        b0, b1, b2 = sh, 0.5 * ch, -0.25 * sh
    else:
        b0, b1, b2 = ch, -0.5 * sh, -0.25 * ch
    return a0 * b0, a1 * b0 + a0 * b1, a2 * b0 + 2.0 * a1 * b1 + a0 * b2


def _sqrt_r_jet(g, g1, g2, r, theta):
    """Local-frame jet of F = sqrt(r) g(theta), using closed-form polar derivatives."""
    c, s = np.cos(theta), np.sin(theta)
    sr = np.sqrt(r)
    r32 = r * sr
    out = np.empty((N_CHANNELS,) + np.shape(r))
    out[VAL] = sr * g
    out[D1] = (0.5 * c * g - s * g1) / sr
    out[D2] = (0.5 * s * g + c * g1) / sr
    out[H11] = (-0.25 * c * c * g + s * s * (0.5 * g + g2) + s * c * g1) / r32
    out[H22] = (-0.25 * s * s * g + c * c * (0.5 * g + g2) - s * c * g1) / r32
    out[H12] = (-s * c * (0.75 * g + g2) - 0.5 * (c * c - s * s) * g1) / r32
    return out


def _rotate_jets(local, rot):
    """Rotate a local-frame vector jet array (6, N, 2) to global axes.

    Derivative channels transform with grad -> R grad, hess -> R hess R^T;
    vector components transform with u -> R u.
    """
    c, s = rot[0, 0], rot[1, 0]
    out = np.empty_like(local)
    out[VAL] = local[VAL]
    out[D1] = c * local[D1] - s * local[D2]
    out[D2] = s * local[D1] + c * local[D2]
    h11, h12, h22 = local[H11], local[H12], local[H22]
    out[H11] = c * c * h11 - 2 * c * s * h12 + s * s * h22
    out[H22] = s * s * h11 + 2 * c * s * h12 + c * c * h22
    out[H12] = c * s * (h11 - h22) + (c * c - s * s) * h12
    vec = np.empty_like(out)
    vec[..., 0] = c * out[..., 0] - s * out[..., 1]
    vec[..., 1] = s * out[..., 0] + c * out[..., 1]
    return vec


def enrichment_basis_jets(tip: CrackTip, kappa, x, side=0):
    """Global-frame jets of the unit mode-I and mode-II enrichment fields.

    Returns an array of shape (2, 6, N, 2): ``[mode, channel, point, component]``.
    The basis does not depend on any trainable parameter, so it can be
    computed once per sample set and scaled by the tip coefficients.
    """
    r, theta = local_polar_array(tip, x, side)
    out = np.empty((2, N_CHANNELS, r.size, 2))
    rot = tip.rotation()
    for mode, comps in enumerate(_angular_factors(kappa)):
        local = np.empty((N_CHANNELS, r.size, 2))
        for comp, (k, s, use_sin) in enumerate(comps):
            local[..., comp] = _sqrt_r_jet(*_angular(k, s, use_sin, theta), r, theta)
        out[mode] = _rotate_jets(local, rot)
    return out


def enrichment_displacement(tip: CrackTip, kappa, x, side=0):
    """Enrichment vector (e1, e2) in global axes for one tip at one point."""
    b = enrichment_basis_jets(tip, kappa, np.reshape(np.asarray(x, float), (1, 2)), side)
    e = tip.ktilde_I * b[0, VAL, 0] + tip.ktilde_II * b[1, VAL, 0]
    return float(e[0]), float(e[1])


@dataclass(frozen=True)
class EnrichedModel:
    """Per-subdomain networks sharing one set of crack tips.

    Flat parameter ordering: every network's parameters in subdomain order,
    then ``(ktilde_I, ktilde_II)`` for each tip in order.
    """

    networks: tuple
    tips: tuple
    material: Material
    subdomains: tuple = field(default=())
    enriched: bool = True

    def __post_init__(self):
        object.__setattr__(self, "networks", tuple(self.networks))
        object.__setattr__(self, "tips", tuple(self.tips))
        object.__setattr__(self, "subdomains", tuple(self.subdomains))
        if self.subdomains and len(self.subdomains) != len(self.networks):
            raise ValueError("one network per subdomain required")

    @property
    def kappa(self):
        return self.material.kappa

    @property
    def n_network_params(self):
        return sum(n.n_params for n in self.networks)

    @property
    def n_params(self):
        return self.n_network_params + 2 * len(self.tips)

    def ktilde(self):
        return np.array([[t.ktilde_I, t.ktilde_II] for t in self.tips]).reshape(len(self.tips), 2)

    def flat_params(self):
        parts = [n.flat_params() for n in self.networks] + [self.ktilde().ravel()]
        return np.concatenate(parts)

    def with_params(self, flat):
        flat = np.asarray(flat, dtype=float)
        if flat.shape != (self.n_params,):
            raise ValueError(f"expected {self.n_params} parameters, got {flat.shape}")
        nets = []
        i = 0
        for n in self.networks:
            nets.append(n.with_params(flat[i : i + n.n_params]))
            i += n.n_params
        k = flat[i:].reshape(-1, 2)
        tips = tuple(replace(t, ktilde_I=float(kk[0]), ktilde_II=float(kk[1])) for t, kk in zip(self.tips, k))
        return replace(self, networks=tuple(nets), tips=tips)

    def network_slices(self):
        out, i = [], 0
        for n in self.networks:
            out.append(slice(i, i + n.n_params))
            i += n.n_params
        return out

    def side_signs(self, subdomain):
        if not self.subdomains:
            return [0] * len(self.tips)
        normal = self.subdomains[subdomain].side_normal
        return [side_sign(t, normal) for t in self.tips]

    def basis_jets(self, x, subdomain=0, side=None):
        """Enrichment basis for all tips, shape (n_tips, 2, 6, N, 2), or None."""
        if not self.enriched or not self.tips:
            return None
        signs = self.side_signs(subdomain) if side is None else [side] * len(self.tips)
        return np.stack([enrichment_basis_jets(t, self.kappa, x, s) for t, s in zip(self.tips, signs)])

    def locate(self, x):
        from .geometry import locate_points

        return locate_points(self.subdomains, x)

    def displacement_jets(self, x, subdomain=None, side=None):
        """Jets (6, N, 2) of the enriched displacement at points ``x``."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if subdomain is None:
            if len(self.networks) == 1 and not self.subdomains:
                owner = np.zeros(len(x), dtype=int)
            else:
                owner = self.locate(x)
                if np.any(owner < 0):
                    raise OutsideSubdomainError(f"point {x[np.argmax(owner < 0)]} lies in no subdomain")
        else:
            if self.subdomains and not self.subdomains[subdomain].contains(x, strict=False).all():
                raise OutsideSubdomainError(f"points outside subdomain {subdomain}")
            owner = np.full(len(x), subdomain, dtype=int)
        out = np.empty((N_CHANNELS, len(x), 2))
        for s in np.unique(owner):
            idx = owner == s
            out[:, idx] = self._jets_on(int(s), x[idx], side)
        return out

    def _jets_on(self, s, x, side=None):
        u, _ = network_jets(self.networks[s], x)
        basis = self.basis_jets(x, s, side)
        if basis is not None:
            u = u + np.einsum("tm,tmcnj->cnj", self.ktilde(), basis)
        return u

    def displacement(self, x, subdomain=None, side=None):
        return self.displacement_jets(x, subdomain, side)[VAL]


def enriched_displacement(model: EnrichedModel, subdomain, x, side=None):
    """(u1, u2) at a single point of the given subdomain."""
    u = model.displacement_jets(np.reshape(np.asarray(x, float), (1, 2)), subdomain=subdomain, side=side)
    check_finite(u, "displacement")
    return float(u[VAL, 0, 0]), float(u[VAL, 0, 1])


def zero_model_like(model: EnrichedModel):
    return model.with_params(np.zeros(model.n_params))


def single_domain_model(network: Network, tips=(), material=None, enriched=True):
    return EnrichedModel((network,), tuple(tips), material or Material(), (), enriched)
