"""Fully-connected displacement networks with two inputs and two outputs."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.special import expit


class InvalidArchitectureError(ValueError):
    pass


class ActivationKind(str, enum.Enum):
    SIGMOID = "sigmoid"
    TANH = "tanh"
    SWISH = "swish"
    ARCTAN = "arctan"
    SOFTPLUS = "softplus"
    LINEAR = "linear"


def activation_derivatives(kind, z, order=2):
    """Value and analytic derivatives of an activation, up to ``order`` (<= 3).

    Returns a tuple ``(f, f', f'', ...)`` of arrays shaped like ``z``.
    The third derivative is needed by the reverse pass through Hessians.
    """
    kind = ActivationKind(kind)
    z = np.asarray(z, dtype=float)
    if kind is ActivationKind.LINEAR:
        out = (z, np.ones_like(z), np.zeros_like(z), np.zeros_like(z))
    elif kind is ActivationKind.SIGMOID:
        s = expit(z)
        d1 = s * (1.0 - s)
        d2 = d1 * (1.0 - 2.0 * s)
        d3 = d2 * (1.0 - 2.0 * s) - 2.0 * d1 * d1 if order >= 3 else None
        out = (s, d1, d2, d3)
    elif kind is ActivationKind.TANH:
        t = np.tanh(z)
        d1 = 1.0 - t * t
        d2 = -2.0 * t * d1
        d3 = -2.0 * (d1 * d1 + t * d2) if order >= 3 else None
        out = (t, d1, d2, d3)
    elif kind is ActivationKind.SWISH:
        s = expit(z)
        s1 = s * (1.0 - s)
        s2 = s1 * (1.0 - 2.0 * s)
        f = z * s
        d1 = s + z * s1
        d2 = 2.0 * s1 + z * s2
        if order >= 3:
            s3 = s2 * (1.0 - 2.0 * s) - 2.0 * s1 * s1
            d3 = 3.0 * s2 + z * s3
        else:
            d3 = None
        out = (f, d1, d2, d3)
    elif kind is ActivationKind.ARCTAN:
        q = 1.0 / (1.0 + z * z)
        d3 = (6.0 * z * z - 2.0) * q**3 if order >= 3 else None
        out = (np.arctan(z), q, -2.0 * z * q * q, d3)
    elif kind is ActivationKind.SOFTPLUS:
        f = np.log1p(np.exp(-np.abs(z))) + np.maximum(z, 0.0)
        s = expit(z)
        d1 = s
        d2 = s * (1.0 - s)
        d3 = d2 * (1.0 - 2.0 * s) if order >= 3 else None
        out = (f, d1, d2, d3)
    else:  # pragma: no cover
        raise ValueError(kind)
    return out[: order + 1]


def activation_eval(kind, z):
    """Return ``(value, first derivative, second derivative)`` at ``z``."""
    v, d1, d2 = activation_derivatives(kind, z, order=2)
    if np.ndim(z) == 0:
        return float(v), float(d1), float(d2)
    return v, d1, d2


@dataclass(frozen=True)
class Layer:
    weight: np.ndarray  # (out, in)
    bias: np.ndarray  # (out,)
    activation: ActivationKind

    @property
    def n_params(self):
        return self.weight.size + self.bias.size


@dataclass(frozen=True)
class Network:
    """Stack of dense layers mapping (x1, x2) to (u1_raw, u2_raw).

    Flat parameter ordering: layer by layer, the weight matrix in row-major
    order followed by the bias vector.  Inputs are first mapped through the
    fixed affine transform ``(x - shift) / scale``, which is not trained.
    """

    layers: tuple
    shift: tuple = (0.0, 0.0)
    scale: tuple = (1.0, 1.0)

    def __post_init__(self):
        object.__setattr__(self, "shift", tuple(float(v) for v in self.shift))
        object.__setattr__(self, "scale", tuple(float(v) for v in self.scale))
        if len(self.shift) != 2 or len(self.scale) != 2 or not all(v > 0 for v in self.scale):
            raise InvalidArchitectureError("input shift/scale must be pairs with positive scale")
        if not self.layers:
            raise InvalidArchitectureError("network needs at least one layer")
        fan_in = 2
        for k, layer in enumerate(self.layers):
            if layer.weight.ndim != 2 or layer.weight.shape[1] != fan_in:
                raise InvalidArchitectureError(f"layer {k} expects {fan_in} inputs, got {layer.weight.shape}")
            if layer.bias.shape != (layer.weight.shape[0],):
                raise InvalidArchitectureError(f"layer {k} bias shape {layer.bias.shape}")
            fan_in = layer.weight.shape[0]
        last = self.layers[-1]
        if last.weight.shape[0] != 2 or last.activation is not ActivationKind.LINEAR:
            raise InvalidArchitectureError("final layer must have 2 outputs and linear activation")

    @property
    def widths(self):
        return [2] + [layer.weight.shape[0] for layer in self.layers]

    @property
    def hidden_activation(self):
        if len(self.layers) == 1:
            return ActivationKind.LINEAR
        return self.layers[0].activation

    @property
    def n_params(self):
        return sum(layer.n_params for layer in self.layers)

    def flat_params(self):
        return np.concatenate([np.concatenate([l.weight.ravel(), l.bias]) for l in self.layers])

    def with_params(self, flat):
        flat = np.asarray(flat, dtype=float)
        if flat.shape != (self.n_params,):
            raise ValueError(f"expected {self.n_params} parameters, got {flat.shape}")
        layers = []
        i = 0
        for layer in self.layers:
            n_out, n_in = layer.weight.shape
            w = flat[i : i + n_out * n_in].reshape(n_out, n_in)
            i += n_out * n_in
            b = flat[i : i + n_out]
            i += n_out
            layers.append(Layer(w, b, layer.activation))
        return Network(tuple(layers), self.shift, self.scale)

    def architecture(self):
        return {
            "widths": self.widths,
            "activations": [l.activation.value for l in self.layers],
            "shift": list(self.shift),
            "scale": list(self.scale),
        }

    @classmethod
    def from_architecture(cls, arch, flat=None):
        widths = arch["widths"]
        acts = arch["activations"]
        if len(acts) != len(widths) - 1:
            raise InvalidArchitectureError("activation count must equal layer count")
        layers = tuple(
            Layer(np.zeros((n_out, n_in)), np.zeros(n_out), ActivationKind(a))
            for n_in, n_out, a in zip(widths[:-1], widths[1:], acts)
        )
        net = cls(layers, tuple(arch.get("shift", (0.0, 0.0))), tuple(arch.get("scale", (1.0, 1.0))))
        return net if flat is None else net.with_params(flat)

    def normalize(self, x):
        return (np.atleast_2d(np.asarray(x, dtype=float)) - self.shift) / self.scale

    def with_input_map(self, shift, scale):
        return Network(self.layers, shift, scale)

    def __call__(self, x):
        """Plain forward pass for points of shape (N, 2); returns (N, 2)."""
        a = self.normalize(x)
        for layer in self.layers:
            a = activation_derivatives(layer.activation, a @ layer.weight.T + layer.bias, order=0)[0]
        return a


def init_network(hidden_layers, neurons_per_layer, activation=ActivationKind.SWISH, seed=0):
    """Glorot-uniform weights and zero biases, deterministic in ``seed``."""
    if hidden_layers < 1 or neurons_per_layer < 1:
        raise InvalidArchitectureError(
            f"need hidden_layers >= 1 and neurons_per_layer >= 1, got {hidden_layers}, {neurons_per_layer}"
        )
    activation = ActivationKind(activation)
    rng = np.random.default_rng(seed)
    widths = [2] + [neurons_per_layer] * hidden_layers + [2]
    layers = []
    for k, (n_in, n_out) in enumerate(zip(widths[:-1], widths[1:])):
        bound = np.sqrt(6.0 / (n_in + n_out))
        w = rng.uniform(-bound, bound, size=(n_out, n_in))
        act = ActivationKind.LINEAR if k == len(widths) - 2 else activation
        layers.append(Layer(w, np.zeros(n_out), act))
    return Network(tuple(layers))


def linear_network(weight, bias):
    """Single linear layer; mostly useful for tests and hand-built fields."""
    return Network((Layer(np.asarray(weight, float), np.asarray(bias, float), ActivationKind.LINEAR),))
