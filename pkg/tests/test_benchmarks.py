import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import williams_model
from crackpinn.benchmarks import (
    BENCHMARK_IDS,
    SLANT_BEM,
    BenchmarkRun,
    DomainError,
    UnknownBenchmarkError,
    benchmark_case,
    edge_crack_cod_reference,
    evaluate_model,
    exact_center_crack_K,
    format_report,
    relative_error,
    summarize,
)
from crackpinn.sif import KStarSample


def test_center_crack_reference_values():
    assert round(exact_center_crack_K(1.0, 1.0, 2.0), 4) == 2.1025
    assert exact_center_crack_K(1.0, 1.0, 2.0) == pytest.approx(2.1025452, abs=1e-7)
    a = 1e-6
    assert exact_center_crack_K(3.0, a, 2.0) == pytest.approx(3.0 * math.sqrt(math.pi * a), rel=1e-10)
    with pytest.raises(DomainError):
        exact_center_crack_K(1.0, 2.0, 2.0)


@pytest.mark.parametrize("ratio, value", [(0.1, 6.1591), (0.5, 19.6935), (0.6, 33.2254)])
def test_edge_cod_reference_values(ratio, value):
    # tabulated values are truncated, not rounded, at a/b = 0.5
    assert edge_crack_cod_reference(1.0, ratio, 1.0, normalized=True) == pytest.approx(value, abs=1e-4)


def test_edge_cod_domain():
    with pytest.raises(DomainError):
        edge_crack_cod_reference(1.0, 1.0, 1.0)


def test_edge_cod_dimensional_form():
    v = edge_crack_cod_reference(2.0, 0.5, 1.0, nu=0.3, E=4.0)
    assert v == pytest.approx(19.6935 * 2.0 * 0.5 * 0.91 / 4.0, rel=1e-5)


@given(st.floats(0.01, 1.98), st.floats(0.001, 0.01))
def test_center_reference_monotone_in_a(a, da):
    assert exact_center_crack_K(1.0, a + da, 2.0) > exact_center_crack_K(1.0, a, 2.0)


def test_edge_reference_monotone():
    vals = [edge_crack_cod_reference(1.0, q, 1.0, normalized=True) for q in np.linspace(0.1, 0.6, 51)]
    assert all(b > a for a, b in zip(vals, vals[1:]))


@given(st.floats(0.1, 10), st.floats(0.1, 0.9))
def test_references_linear_in_load(load, a):
    assert exact_center_crack_K(2 * load, a, 1.0) == pytest.approx(2 * exact_center_crack_K(load, a, 1.0), rel=1e-14)
    assert edge_crack_cod_reference(2 * load, a, 1.0) == pytest.approx(2 * edge_crack_cod_reference(load, a, 1.0), rel=1e-14)


def test_case_defaults():
    c = benchmark_case("center-tension")
    assert (c.a, c.b, c.h, c.grid, c.iterations) == (1.0, 2.0, 6.0, (30, 180), 2500)
    assert (c.arch.hidden_layers, c.arch.neurons, c.arch.activation.value) == (5, 20, "swish")
    assert benchmark_case("center-shear").grid == (40, 200)
    e = benchmark_case("edge-tension")
    assert e.grid == (20, 100) and e.tolerance == 3e-2
    s = benchmark_case("slant")
    assert s.angle == 45.0 and s.material.assumption.value == "plane_stress"
    assert s.references() == {"K_I": 1.0838, "K_II": 0.9666}
    assert s.face_length == 2.0


def test_case_overrides_and_validation():
    c = benchmark_case("center-tension", hidden_layers=3, neurons=10, activation="tanh")
    assert (c.arch.hidden_layers, c.arch.neurons, c.arch.activation.value) == (3, 10, "tanh")
    assert benchmark_case("edge-tension", a=0.3).references()["cod_normalized"] == pytest.approx(9.2343, abs=1e-4)
    with pytest.raises(DomainError):
        benchmark_case("edge-tension", a=1.0)
    with pytest.raises(DomainError):
        benchmark_case("center-tension", a=3.0)
    with pytest.raises(DomainError):
        benchmark_case("slant", a=3.0)
    assert benchmark_case("slant", angle=30.0).references() == dict(zip(("K_I", "K_II"), SLANT_BEM[30.0]))
    assert benchmark_case("slant", angle=20.0).references() == {}


def test_unknown_benchmark_lists_ids():
    with pytest.raises(UnknownBenchmarkError) as e:
        benchmark_case("center-torsion")
    for i in BENCHMARK_IDS:
        assert i in str(e.value)


@pytest.mark.parametrize("case_id", BENCHMARK_IDS)
def test_geometry_builds(case_id):
    case = benchmark_case(case_id)
    geo = case.geometry()
    assert geo.extra["benchmark"] == case_id
    assert len(geo.subdomains) == 2
    assert len(geo.tip_positions) == (2 if case_id == "slant" else 1)
    counts = case.problem().collocation().counts
    assert counts["n_pde"] > 0 and counts["n_t1"] + counts["n_t2"] > 0


def test_slant_right_tip_first():
    geo = benchmark_case("slant").geometry()
    (p0, o0), (p1, o1) = geo.tip_positions
    assert p0[0] > 0 and p0[1] > 0 and o0 == pytest.approx(math.pi / 4)
    assert p1[0] < 0 and o1 == pytest.approx(-3 * math.pi / 4)


def test_evaluate_model_on_williams_field():
    case = benchmark_case("center-tension")
    geo = case.geometry()
    (pos, ori), = geo.tip_positions
    model = williams_model(2.1025, 0.0, case.material, pos, ori, geo.subdomains, n_nets=2)
    values, samples = evaluate_model(case, model)
    assert values["K_I"] == pytest.approx(2.1025, rel=1e-12)
    assert values["K_I_enrichment"] == pytest.approx(2.1025, rel=1e-12)
    assert abs(values["K_II"]) < 1e-12 and len(samples) == 12


def test_edge_cod_from_williams_field():
    case = benchmark_case("edge-tension")
    geo = case.geometry()
    (pos, ori), = geo.tip_positions
    k = 1.5
    model = williams_model(k, 0.0, case.material, pos, ori, geo.subdomains, n_nets=2)
    values, _ = evaluate_model(case, model)
    m = case.material
    cod = k / m.mu * math.sqrt(case.a / (2 * math.pi)) * (m.kappa + 1)
    assert values["cod"] == pytest.approx(cod, rel=1e-12)


def _run(seed, k1):
    return BenchmarkRun(seed, {"K_I": k1, "K_II": 0.0, "K_I_enrichment": k1, "K_II_enrichment": 0.0},
                        [KStarSample(0.1, k1, 0.0)], 1e-4, 1.0)


def test_summary_uses_median():
    case = benchmark_case("center-tension")
    rep = summarize(case, [_run(0, 2.0), _run(1, 2.1), _run(2, 5.0)])
    assert rep.medians["K_I"] == 2.1
    assert rep.relative_errors["K_I"] == pytest.approx(relative_error(2.1, exact_center_crack_K(1.0, 1.0, 2.0)), rel=1e-12)
    assert rep.passed is True
    text = format_report(rep)
    assert "K_I" in text and "PASS" in text
    rows = rep.summary_rows()
    assert rows[0]["quantity"] == "K_I" and rows[0]["pass"]
    back = BenchmarkRun.from_dict(rep.runs[0].to_dict())
    assert back == rep.runs[0]
    bad = summarize(case, [_run(0, 1.0)])
    assert bad.passed is False and "FAIL" in format_report(bad)
