import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import williams_model
from crackpinn.elasticity import Material, williams_displacement
from crackpinn.geometry import cracked_rectangle
from crackpinn.kinematics import CrackTip, enrichment_displacement
from crackpinn.sif import (
    InsufficientSamplesError,
    KStarSample,
    OffCrackError,
    cod_sif,
    dem_sif,
    extrapolate_sif,
    k_to_ktilde,
    ktilde_to_k,
    kstar_curve,
)


def _samples(fn, n=12, lo=0.05, hi=0.3):
    return [KStarSample(r, fn(r), -fn(r)) for r in np.linspace(lo, hi, n)]


def test_ktilde_conversion_examples():
    assert ktilde_to_k(0.0, 0.7) == 0.0
    assert ktilde_to_k(1.0, 1 / (2 * np.sqrt(2 * np.pi))) == pytest.approx(1.0, rel=1e-15)
    assert k_to_ktilde(ktilde_to_k(0.37, 0.4), 0.4) == pytest.approx(0.37, rel=1e-15)


def test_ktilde_least_squares_oracle():
    # fit the unit enrichment basis to the closed-form field; recover the coefficient
    m = Material()
    rng = np.random.default_rng(7)
    r = rng.uniform(0.01, 2.0, 40)
    t = rng.uniform(-3.0, 3.0, 40)
    pts = np.column_stack([r * np.cos(t), r * np.sin(t)])
    cols = []
    for kt in ((1.0, 0.0), (0.0, 1.0)):
        tip = CrackTip((0.0, 0.0), 0.0, *kt)
        cols.append(np.concatenate([enrichment_displacement(tip, m.kappa, p) for p in pts]))
    a = np.column_stack(cols)
    w = williams_displacement(3.0, 0.0, r, t, m.mu, m.kappa)
    b = np.column_stack(w).ravel()
    coef, *_ = np.linalg.lstsq(a, b, rcond=None)
    assert coef[0] == pytest.approx(3.0 / (2 * m.mu * np.sqrt(2 * np.pi)), rel=1e-12)
    assert abs(coef[1]) < 1e-12
    assert ktilde_to_k(coef[0], m.mu) == pytest.approx(3.0, abs=1e-10)


def test_extrapolate_examples():
    k1, k2 = extrapolate_sif(_samples(lambda r: 2.0 + 0.5 * r))
    assert k1 == pytest.approx(2.0, abs=1e-12) and k2 == pytest.approx(-2.0, abs=1e-12)
    k1, _ = extrapolate_sif(_samples(lambda r: 1.8 + 0 * r))
    assert k1 == pytest.approx(1.8, abs=1e-12)


def test_extrapolate_respects_window_and_length():
    s = _samples(lambda r: 1.0 + r, lo=0.1, hi=0.6)
    s += [KStarSample(5.0, 100.0, 100.0)]  # outside every window below
    k1, _ = extrapolate_sif(s, window=(0.05, 0.3), crack_length=2.0)
    assert k1 == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(InsufficientSamplesError):
        extrapolate_sif(s[:3], window=(0.05, 0.3), crack_length=2.0)


@given(st.permutations(list(range(12))))
def test_extrapolate_order_invariant(order):
    s = _samples(lambda r: 0.3 - 2 * r + np.sin(9 * r))
    base = extrapolate_sif(s)
    shuffled = extrapolate_sif([s[i] for i in order])
    assert shuffled == pytest.approx(base, rel=1e-12, abs=1e-14)


def test_cod_examples_single_domain():
    m2 = williams_model(2.0, 0.0)
    for r in (0.05, 0.4, 1.0):
        s = cod_sif(m2, 0, r)
        assert s.k1_star == pytest.approx(2.0, rel=1e-13) and abs(s.k2_star) < 1e-13
    m1 = williams_model(0.0, 1.0)
    s = cod_sif(m1, 0, 0.3)
    assert s.k2_star == pytest.approx(1.0, rel=1e-13) and abs(s.k1_star) < 1e-13
    m0 = williams_model(0.0, 0.0)
    assert cod_sif(m0, 0, 0.3) == KStarSample(0.3, 0.0, 0.0)


@given(
    st.floats(-3, 3), st.floats(-3, 3), st.floats(2e-3, 0.999),
    st.floats(0.0, 0.49), st.sampled_from(["plane_strain", "plane_stress"]), st.floats(-3.1, 3.1),
)
def test_cod_round_trip(k1, k2, r, nu, assumption, phi):
    m = Material(youngs_modulus=2.5, poisson_ratio=nu, assumption=assumption)
    model = williams_model(k1, k2, m, position=(0.2, -0.1), orientation=phi)
    s = cod_sif(model, 0, r, face_length=1.0)
    scale = max(abs(k1), abs(k2), 1.0)
    assert abs(s.k1_star - k1) <= 1e-12 * scale
    assert abs(s.k2_star - k2) <= 1e-12 * scale


def test_dem_on_williams_field():
    model = williams_model(1.3, -0.4)
    k1, k2, samples = dem_sif(model, 0, 1.0, face_length=1.0)
    assert len(samples) == 12
    assert k1 == pytest.approx(1.3, abs=1e-12) and k2 == pytest.approx(-0.4, abs=1e-12)
    assert samples[0].r == pytest.approx(0.05) and samples[-1].r == pytest.approx(0.3)


def test_off_crack_errors():
    model = williams_model(1.0, 0.0)
    with pytest.raises(OffCrackError):
        cod_sif(model, 0, 1.5, face_length=1.0)
    with pytest.raises(OffCrackError):
        cod_sif(model, 0, 0.0)


def test_cod_on_split_domain():
    free = {e: [("traction", (0.0, 0.0))] for e in ("top", "bottom", "left", "right")}
    subs, _, tips = cracked_rectangle((-2, -2), (2, 2), (0, 0), (1, 1), (-1, 1), free)
    m = Material()
    right = tips[0]
    model = williams_model(0.9, 0.2, m, position=right[0], orientation=right[1], subdomains=subs, n_nets=2)
    curve = kstar_curve(model, 0, 1.0, face_length=2.0)
    assert all(s.k1_star == pytest.approx(0.9, rel=1e-12) for s in curve)
    assert all(s.k2_star == pytest.approx(0.2, rel=1e-12) for s in curve)
    with pytest.raises(OffCrackError):
        cod_sif(model, 0, 2.5, face_length=2.0)
