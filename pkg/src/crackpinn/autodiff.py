"""Exact spatial jets and parameter gradients for the displacement model.

A *jet* array has shape ``(6, N, k)``: for each of N points and k outputs it
stores the value, the two first derivatives and the three distinct second
derivatives, in the channel order ``VAL, D1, D2, H11, H12, H22``.  Jets are
pushed through the network layer by layer (second-order forward mode), and
the loss gradient is obtained with a hand-written reverse sweep over that
forward pass.  Nothing here uses finite differences.

The per-element activation work is fused into compiled kernels; dense
layers are single matrix products over all channels and points.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .network import ActivationKind, Network

VAL, D1, D2, H11, H12, H22 = range(6)
N_CHANNELS = 6


class NonFiniteError(FloatingPointError):
    """Raised when a jet, loss or gradient entry is NaN or infinite."""


@dataclass(frozen=True)
class SpatialJet:
    value: float
    grad: np.ndarray  # (2,)
    hess: np.ndarray  # (2, 2), symmetric

    @classmethod
    def from_channels(cls, c):
        c = [float(v) for v in c]
        hess = np.array([[c[H11], c[H12]], [c[H12], c[H22]]])
        return cls(c[VAL], np.array([c[D1], c[D2]]), hess)


def input_jets(x, shift=(0.0, 0.0), scale=(1.0, 1.0)):
    """Jets of the map x -> (x - shift) / scale at points ``x`` of shape (N, 2)."""
    x = np.asarray(x, dtype=float)
    j = np.zeros((N_CHANNELS, x.shape[0], 2))
    j[VAL] = (x - shift) / scale
    j[D1, :, 0] = 1.0 / scale[0]
    j[D2, :, 1] = 1.0 / scale[1]
    return j


_KIND_CODE = {
    ActivationKind.SIGMOID: 0,
    ActivationKind.TANH: 1,
    ActivationKind.SWISH: 2,
    ActivationKind.ARCTAN: 3,
    ActivationKind.SOFTPLUS: 4,
}


@njit(cache=True)
def _scalar_derivs(code, z, e, lp):
    # value and three derivatives for one activation code; ``e`` is the
    # transcendental evaluated vectorised outside (exp(-|z|), tanh or arctan)
    # and ``lp`` is log1p(exp(-|z|)) for softplus
    if code == 0 or code == 2 or code == 4:
        if z >= 0:
            s = 1.0 / (1.0 + e)
        else:
            s = e / (1.0 + e)
        s1 = s * (1.0 - s)
        s2 = s1 * (1.0 - 2.0 * s)
        s3 = s2 * (1.0 - 2.0 * s) - 2.0 * s1 * s1
        if code == 0:
            return s, s1, s2, s3
        if code == 2:
            return z * s, s + z * s1, 2.0 * s1 + z * s2, 3.0 * s2 + z * s3
        return lp + max(z, 0.0), s, s1, s2
    if code == 1:
        d1 = 1.0 - e * e
        d2 = -2.0 * e * d1
        return e, d1, d2, -2.0 * (d1 * d1 + e * d2)
    q = 1.0 / (1.0 + z * z)
    return e, q, -2.0 * z * q * q, (6.0 * z * z - 2.0) * q * q * q


@njit(cache=True)
def _activate_kernel(code, z, e, lp, a, s):
    n, k = z.shape[1], z.shape[2]
    for i in range(n):
        for j in range(k):
            f0, f1, f2, f3 = _scalar_derivs(code, z[0, i, j], e[i, j], lp[i, j])
            z1 = z[1, i, j]
            z2 = z[2, i, j]
            a[0, i, j] = f0
            a[1, i, j] = f1 * z1
            a[2, i, j] = f1 * z2
            a[3, i, j] = f2 * z1 * z1 + f1 * z[3, i, j]
            a[4, i, j] = f2 * z1 * z2 + f1 * z[4, i, j]
            a[5, i, j] = f2 * z2 * z2 + f1 * z[5, i, j]
            s[0, i, j] = f1
            s[1, i, j] = f2
            s[2, i, j] = f3


@njit(cache=True)
def _activate_vjp_kernel(g, z, s, gz):
    n, k = z.shape[1], z.shape[2]
    for i in range(n):
        for j in range(k):
            s1 = s[0, i, j]
            s2 = s[1, i, j]
            s3 = s[2, i, j]
            z1 = z[1, i, j]
            z2 = z[2, i, j]
            g0 = g[0, i, j]
            g1 = g[1, i, j]
            g2 = g[2, i, j]
            g11 = g[3, i, j]
            g12 = g[4, i, j]
            g22 = g[5, i, j]
            gz[0, i, j] = (
                g0 * s1
                + s2 * (g1 * z1 + g2 * z2 + g11 * z[3, i, j] + g12 * z[4, i, j] + g22 * z[5, i, j])
                + s3 * (g11 * z1 * z1 + g12 * z1 * z2 + g22 * z2 * z2)
            )
            gz[1, i, j] = g1 * s1 + s2 * (2.0 * g11 * z1 + g12 * z2)
            gz[2, i, j] = g2 * s1 + s2 * (2.0 * g22 * z2 + g12 * z1)
            gz[3, i, j] = g11 * s1
            gz[4, i, j] = g12 * s1
            gz[5, i, j] = g22 * s1


def _activate(kind, z):
    """Activation applied to a jet, plus the derivative values needed in reverse."""
    code = _KIND_CODE[ActivationKind(kind)]
    if code == 1:
        e = np.tanh(z[VAL])
    elif code == 3:
        e = np.arctan(z[VAL])
    else:
        e = np.exp(-np.abs(z[VAL]))
    lp = np.log1p(e) if code == 4 else e
    a = np.empty_like(z)
    s = np.empty((3,) + z.shape[1:])
    _activate_kernel(code, z, e, lp, a, s)
    return a, s


def _dense(j, layer):
    n_out, n_in = layer.weight.shape
    z = (j.reshape(-1, n_in) @ layer.weight.T).reshape(j.shape[0], j.shape[1], n_out)
    z[VAL] += layer.bias
    return z


def network_jets(net: Network, x, keep_cache=False):
    """Forward second-order jets of the raw network outputs.

    Returns ``(jets, cache)`` with jets of shape (6, N, 2). ``cache`` is
    ``None`` unless ``keep_cache`` is set; it feeds :func:`network_jets_vjp`.
    """
    j = input_jets(x, net.shift, net.scale)
    cache = [] if keep_cache else None
    for layer in net.layers:
        z = _dense(j, layer)
        if layer.activation is ActivationKind.LINEAR:
            if keep_cache:
                cache.append((j, None, None))
            j = z
            continue
        a, s = _activate(layer.activation, z)
        if keep_cache:
            cache.append((j, z, s))
        j = a
    return j, cache


def network_jets_vjp(net: Network, cache, g_out):
    """Reverse sweep: gradient of a scalar w.r.t. the flat network parameters.

    ``g_out`` is the derivative of the scalar w.r.t. every output jet entry,
    shape (6, N, 2).  Accumulation over points is a plain matrix product in
    a fixed order, so repeated calls are bitwise reproducible.
    """
    grads = []
    g = np.ascontiguousarray(g_out)
    for layer, (j_in, z, s) in zip(reversed(net.layers), reversed(cache)):
        if s is None:
            gz = g
        else:
            gz = np.empty_like(g)
            _activate_vjp_kernel(g, z, s, gz)
        n_out, n_in = layer.weight.shape
        gw = gz.reshape(-1, n_out).T @ j_in.reshape(-1, n_in)
        gb = gz[VAL].sum(axis=0)
        grads.append(np.concatenate([gw.ravel(), gb]))
        g = (gz.reshape(-1, n_out) @ layer.weight).reshape(gz.shape[0], gz.shape[1], n_in)
    return np.concatenate(grads[::-1])


def check_finite(arr, what="value"):
    arr = np.asarray(arr)
    if not np.all(np.isfinite(arr)):
        bad = np.argwhere(~np.isfinite(arr))
        raise NonFiniteError(f"non-finite {what} at index {tuple(int(i) for i in bad[0])}")
    return arr


def spatial_jets(model, x, subdomain=None, side=None):
    """Jets of the enriched displacement (u1, u2) at a single point.

    ``model`` is an :class:`~crackpinn.kinematics.EnrichedModel`.
    """
    jets = model.displacement_jets(np.reshape(np.asarray(x, float), (1, 2)), subdomain=subdomain, side=side)
    check_finite(jets, "spatial jet")
    return SpatialJet.from_channels(jets[:, 0, 0]), SpatialJet.from_channels(jets[:, 0, 1])


def loss_gradient(model, problem):
    """Loss value and exact gradient over the model's flat parameter vector.

    ``problem`` is any object exposing ``value_and_grad(params)``, normally a
    :class:`~crackpinn.training.LossProblem`.
    """
    loss, grad = problem.value_and_grad(model.flat_params())
    if not np.isfinite(loss):
        raise NonFiniteError(f"non-finite loss {loss}")
    check_finite(grad, "gradient")
    return float(loss), grad
