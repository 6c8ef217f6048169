import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from crackpinn.autodiff import (
    D1,
    D2,
    H11,
    H12,
    H22,
    VAL,
    NonFiniteError,
    check_finite,
    loss_gradient,
    network_jets,
    network_jets_vjp,
    spatial_jets,
)
from crackpinn.elasticity import Material
from crackpinn.kinematics import CrackTip, EnrichedModel, single_domain_model
from crackpinn.network import ActivationKind, init_network, linear_network

SMOOTH = [k for k in ActivationKind if k is not ActivationKind.LINEAR]


def rel_err(a, b, floor=1e-10):
    """Relative error with an absolute guard: entries within ``floor`` count as 0."""
    excess = np.maximum(np.abs(a - b) - floor, 0.0)
    return excess / np.maximum(np.maximum(np.abs(a), np.abs(b)), 1e-300)


def fd_spatial(jets_of, x, h=1e-3):
    """Fourth-order central differences with step h.

    First derivatives come from the values, second derivatives from the
    (separately verified) first-derivative channels, which keeps rounding at
    O(eps/h) instead of O(eps/h^2).
    """
    e1, e2 = np.array([h, 0.0]), np.array([0.0, h])

    def diff(e, ch):
        v = [jets_of(x + k * e)[ch] for k in (-2, -1, 1, 2)]
        return (v[0] - 8 * v[1] + 8 * v[2] - v[3]) / (12 * h)

    return {
        D1: diff(e1, VAL),
        D2: diff(e2, VAL),
        H11: diff(e1, D1),
        H12: 0.5 * (diff(e2, D1) + diff(e1, D2)),
        H22: diff(e2, D2),
    }


def test_identity_linear_layer():
    model = single_domain_model(linear_network(np.eye(2), np.zeros(2)), enriched=False)
    j1, j2 = spatial_jets(model, (0.3, -0.7))
    assert (j1.value, j2.value) == (0.3, -0.7)
    assert np.array_equal(j1.grad, [1, 0]) and np.array_equal(j2.grad, [0, 1])
    assert not j1.hess.any() and not j2.hess.any()


def test_enrichment_only_at_theta_zero():
    net = linear_network(np.zeros((2, 2)), np.zeros(2))
    # plane stress with nu = 1/7 gives kappa = 2.75; choose nu so that kappa = 1.8 in plane strain
    mat = Material(1.0, 0.3, "plane_strain")
    tip = CrackTip((0.0, 0.0), 0.0, 1.0, 0.0)
    model = EnrichedModel((net,), (tip,), mat)
    j1, j2 = spatial_jets(model, (1.0, 0.0))
    assert j1.value == pytest.approx(mat.kappa - 1.0, abs=1e-15)
    assert j2.value == pytest.approx(0.0, abs=1e-15)


def test_hessian_is_symmetric_by_construction(rng):
    model = single_domain_model(init_network(3, 7, seed=2), enriched=False)
    j1, _ = spatial_jets(model, rng.normal(size=2))
    assert j1.hess[0, 1] == j1.hess[1, 0]


@pytest.mark.parametrize("kind", SMOOTH)
@pytest.mark.parametrize("depth,width", [(1, 3), (3, 20), (6, 20)])
def test_network_jets_match_finite_differences(kind, depth, width):
    rng = np.random.default_rng(depth * 100 + width)
    net = init_network(depth, width, kind, seed=depth + width)
    x = rng.uniform(-10, 10, (100, 2))
    jets, _ = network_jets(net, x)
    for ch, fd in fd_spatial(lambda y: network_jets(net, y)[0], x).items():
        assert rel_err(jets[ch], fd).max() <= 1e-6, (kind, ch)


def test_enriched_jets_match_finite_differences(rng):
    mat = Material(1.0, 0.25, "plane_stress")
    tips = (CrackTip((0.2, -0.1), 0.7, 0.8, -0.3), CrackTip((-1.0, 0.5), -2.0, 0.4, 0.9))
    model = EnrichedModel((init_network(3, 8, seed=5),), tips, mat)
    r = rng.uniform(0.3, 3.0, 60)
    t = rng.uniform(-2.5, 2.5, 60)  # keep away from both cuts
    x = np.asarray(tips[0].position) + np.column_stack([r * np.cos(t + 0.7), r * np.sin(t + 0.7)])
    # drop points close to the second tip's cut so central differences do not straddle it
    from crackpinn.kinematics import local_polar_array

    _, th2 = local_polar_array(tips[1], x)
    x = x[np.abs(np.abs(th2) - np.pi) > 0.05]
    jets = model.displacement_jets(x)
    for ch, fd in fd_spatial(model.displacement_jets, x).items():
        assert rel_err(jets[ch], fd).max() <= 1e-6, ch


def test_jets_are_deterministic(rng):
    model = single_domain_model(init_network(4, 10, seed=1), enriched=False)
    x = rng.normal(size=(30, 2))
    assert model.displacement_jets(x).tobytes() == model.displacement_jets(x).tobytes()


def test_linearity_of_jets(rng):
    a = init_network(2, 5, ActivationKind.LINEAR if False else ActivationKind.TANH, seed=1)
    b = init_network(2, 5, ActivationKind.TANH, seed=2)
    x = rng.normal(size=(10, 2))
    ja, _ = network_jets(a, x)
    jb, _ = network_jets(b, x)
    tip = CrackTip((5.0, 5.0), 0.3, 0.7, 0.2)
    mat = Material()
    ma = EnrichedModel((a,), (tip,), mat)
    mb = EnrichedModel((b,), (CrackTip((5.0, 5.0), 0.3, 0.0, 0.0),), mat)
    # sum of outputs: model a (network + enrichment) plus model b (network only)
    total = ma.displacement_jets(x) + mb.displacement_jets(x)
    enr = ma.displacement_jets(x) - ja
    assert np.allclose(total, ja + jb + enr, rtol=0, atol=1e-14)


def _network_objective(net, x, weights):
    jets, cache = network_jets(net, x, keep_cache=True)
    return float(np.sum(weights * jets**2)), 2 * weights * jets, cache


@pytest.mark.parametrize("kind", SMOOTH)
def test_parameter_gradient_matches_finite_differences(kind):
    rng = np.random.default_rng(7)
    net = init_network(3, 6, kind, seed=11)
    x = rng.uniform(-2, 2, (15, 2))
    w = rng.uniform(0.5, 1.5, (6, 15, 2))
    f, g_out, cache = _network_objective(net, x, w)
    grad = network_jets_vjp(net, cache, g_out)
    p = net.flat_params()
    h = 1e-5
    for i in range(len(p)):
        e = np.zeros_like(p)
        e[i] = h
        fp = _network_objective(net.with_params(p + e), x, w)[0]
        fm = _network_objective(net.with_params(p - e), x, w)[0]
        fd = (fp - fm) / (2 * h)
        assert rel_err(grad[i], fd) <= 1e-5, i


def test_output_bias_gradient_is_twice_output():
    net = linear_network(np.eye(2), np.zeros(2))
    x = np.array([[0.4, -1.3]])
    w = np.zeros((6, 1, 2))
    w[VAL] = 1.0
    f, g_out, cache = _network_objective(net, x, w)
    grad = network_jets_vjp(net, cache, g_out)
    assert np.allclose(grad[4:], 2 * x[0])


def test_check_finite_reports_index():
    with pytest.raises(NonFiniteError, match=r"\(1,\)"):
        check_finite(np.array([1.0, np.nan]))


def test_loss_gradient_rejects_non_finite():
    class Bad:
        def value_and_grad(self, p):
            return np.inf, np.zeros_like(p)

    model = single_domain_model(init_network(1, 2, seed=0), enriched=False)
    with pytest.raises(NonFiniteError):
        loss_gradient(model, Bad())


@given(st.floats(-10, 10), st.floats(-10, 10))
def test_point_jets_equal_batched_jets(x1, x2):
    model = single_domain_model(init_network(2, 4, seed=3), enriched=False)
    j1, j2 = spatial_jets(model, (x1, x2))
    batch = model.displacement_jets(np.array([[x1, x2]]))
    assert j1.value == batch[VAL, 0, 0] and j2.grad[1] == batch[D2, 0, 1]
