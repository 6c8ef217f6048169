import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from crackpinn.elasticity import Material, williams_displacement
from crackpinn.geometry import cracked_rectangle
from crackpinn.kinematics import (
    AmbiguousCutError,
    AtTipError,
    CrackTip,
    EnrichedModel,
    OutsideSubdomainError,
    enriched_displacement,
    enrichment_displacement,
    local_polar,
    single_domain_model,
    zero_model_like,
)
from crackpinn.network import init_network
from crackpinn.sif import k_to_ktilde


def _zero_net():
    n = init_network(2, 4, seed=3)
    return n.with_params(np.zeros(n.n_params))


def test_local_polar_examples():
    tip = CrackTip((0.0, 0.0), 0.0)
    assert local_polar(tip, (1.0, 0.0)) == pytest.approx((1.0, 0.0))
    assert local_polar(tip, (0.0, 1.0)) == pytest.approx((1.0, np.pi / 2))
    slant = CrackTip((0.0, 0.0), np.pi / 4)
    assert local_polar(slant, (0.0, 1.0)) == pytest.approx((1.0, np.pi / 4))


def test_local_polar_branch_cut_sides():
    tip = CrackTip((1.0, 0.0), 0.0)
    assert local_polar(tip, (0.5, 0.0), side=1)[1] == np.pi
    assert local_polar(tip, (0.5, 0.0), side=-1)[1] == -np.pi
    with pytest.raises(AmbiguousCutError):
        local_polar(tip, (0.5, 0.0))
    with pytest.raises(AtTipError):
        local_polar(tip, (1.0 + 1e-4, 0.0))


def test_orientation_normalized():
    assert CrackTip((0, 0), -np.pi).orientation == np.pi
    assert CrackTip((0, 0), 3 * np.pi / 2).orientation == pytest.approx(-np.pi / 2)


def test_enrichment_examples():
    tip = CrackTip((0.0, 0.0), 0.0, 1.0, 0.0)
    e = enrichment_displacement(tip, 1.8, (-1.0, 0.0), side=1)
    assert e[0] == pytest.approx(0.0, abs=1e-15) and e[1] == pytest.approx(2.8, rel=1e-14)
    assert enrichment_displacement(CrackTip((0, 0), 0.3), 1.8, (0.2, 0.7)) == (0.0, 0.0)
    assert enrichment_displacement(tip, 1.8, (4.0, 0.0)) == pytest.approx((1.6, 0.0), rel=1e-14)


@given(st.floats(-2, 2), st.floats(1e-2, 5))
def test_face_jump_closed_form(k, r):
    tip = CrackTip((0.0, 0.0), 0.0, k, 0.0)
    up = enrichment_displacement(tip, 1.8, (-r, 0.0), side=1)
    lo = enrichment_displacement(tip, 1.8, (-r, 0.0), side=-1)
    assert up[1] - lo[1] == pytest.approx(2 * np.sqrt(r) * 2.8 * k, rel=1e-13, abs=1e-14)


@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(1e-2, 5), st.floats(-3.1, 3.1))
def test_enrichment_reproduces_williams(k1, k2, r, t):
    m = Material()
    tip = CrackTip((0.0, 0.0), 0.0, k_to_ktilde(k1, m.mu), k_to_ktilde(k2, m.mu))
    e = enrichment_displacement(tip, m.kappa, (r * np.cos(t), r * np.sin(t)))
    w = williams_displacement(k1, k2, r, t, m.mu, m.kappa)
    scale = (abs(k1) + abs(k2)) * np.sqrt(r) + 1e-300
    assert max(abs(e[0] - w[0]), abs(e[1] - w[1])) / scale < 1e-12


@given(st.floats(-np.pi, np.pi), st.floats(-2, 2), st.floats(-2, 2), st.floats(0.05, 3), st.floats(-3, 3))
def test_rotation_consistency(phi, k1, k2, r, t):
    pos = np.array([0.3, -0.2])
    tilted = CrackTip(tuple(pos), phi, k1, k2)
    flat = CrackTip((0.0, 0.0), 0.0, k1, k2)
    c, s = np.cos(phi), np.sin(phi)
    rot = np.array([[c, -s], [s, c]])
    local = np.array([r * np.cos(t), r * np.sin(t)])
    e_tilt = np.array(enrichment_displacement(tilted, 1.8, pos + rot @ local))
    e_flat = rot @ np.array(enrichment_displacement(flat, 1.8, local))
    assert np.allclose(e_tilt, e_flat, rtol=1e-10, atol=1e-12)


def test_zero_network_equals_enrichment():
    tip = CrackTip((0.0, 0.0), 0.0, 1.0, 0.0)
    model = single_domain_model(_zero_net(), [tip])
    x = (0.4, 0.9)
    assert enriched_displacement(model, 0, x) == pytest.approx(enrichment_displacement(tip, 1.8, x), rel=1e-15)


def test_zero_ktilde_equals_network():
    net = init_network(2, 5, seed=1)
    model = single_domain_model(net, [CrackTip((0.0, 0.0), 0.0)])
    x = np.array([[0.3, 0.2]])
    assert enriched_displacement(model, 0, x[0]) == pytest.approx(tuple(net(x)[0]), rel=1e-15)


def test_two_tip_superposition():
    m = Material()
    right = CrackTip((0.5, 0.5), np.pi / 4, 0.7, -0.2)
    left = CrackTip((-0.5, -0.5), -3 * np.pi / 4, 0.4, 0.3)
    model = single_domain_model(_zero_net(), [right, left], m)
    x = (1.2, -0.3)
    total = enriched_displacement(model, 0, x)
    a = enrichment_displacement(right, m.kappa, x)
    b = enrichment_displacement(left, m.kappa, x)
    assert total == pytest.approx((a[0] + b[0], a[1] + b[1]), rel=1e-14)


def test_flat_param_ordering():
    nets = (init_network(1, 3, seed=0), init_network(1, 3, seed=1))
    tips = (CrackTip((0, 0), 0.0, 0.5, 0.25), CrackTip((1, 0), np.pi, -1.0, 2.0))
    model = EnrichedModel(nets, tips, Material())
    p = model.flat_params()
    assert p.size == model.n_params == 2 * nets[0].n_params + 4
    assert p[-4:].tolist() == [0.5, 0.25, -1.0, 2.0]
    assert np.array_equal(model.with_params(p).flat_params(), p)
    assert np.all(zero_model_like(model).flat_params() == 0)
    with pytest.raises(ValueError):
        model.with_params(p[:-1])


def _split_geometry():
    free = {"top": [("traction", (0.0, 1.0))], "bottom": [("traction", (0.0, -1.0))],
            "left": [("traction", (0.0, 0.0))], "right": [("traction", (0.0, 0.0))]}
    return cracked_rectangle((0.0, -1.0), (2.0, 1.0), (0.0, 0.0), (1.0, 0.0), (0.0, 1.0), free)


def test_enrichment_continuous_on_ligament_discontinuous_on_faces():
    subdomains, _, tips = _split_geometry()
    tip = tips[0]
    tip = CrackTip(tip[0], tip[1], 0.8, -0.3)
    model = EnrichedModel((_zero_net(), _zero_net()), (tip,), Material(), subdomains)
    for x in (1.3, 1.7, 2.0):
        up = enriched_displacement(model, 0, (x, 0.0))
        lo = enriched_displacement(model, 1, (x, 0.0))
        assert up == lo
    up = enriched_displacement(model, 0, (0.5, 0.0))
    lo = enriched_displacement(model, 1, (0.5, 0.0))
    assert abs(up[1] - lo[1]) > 0.1


def test_outside_subdomain_error():
    subdomains, _, tips = _split_geometry()
    model = EnrichedModel((_zero_net(), _zero_net()), (CrackTip(*tips[0]),), Material(), subdomains)
    with pytest.raises(OutsideSubdomainError):
        enriched_displacement(model, 0, (1.5, -0.5))
