import numpy as np
import pytest

from curv4 import kernels
from curv4.biortho import (
    Plane,
    biorthogonal,
    hypothesis_report,
    kperp_extremes_closed,
    kperp_extremes_search,
    orthogonal_plane,
    random_frames,
    random_plane,
    sectional,
)
from curv4.curvspec import curvature_operator, random_curvature, spectra
from curv4.errors import DegeneratePlane, EmptySample
from curv4.geometry import riemann
from curv4.lambda2 import TwoFormPoint, hodge_star
from curv4.models import builtin

needs_compiled = pytest.mark.skipif(kernels.compiled_backend is None, reason="compiled kernels not built")


def model_operator(name, p=(0.1, -0.2, 0.3, 0.05), **params):
    return curvature_operator(riemann(builtin(name, **params).metric, p))


def test_plane_validation():
    with pytest.raises(DegeneratePlane):
        Plane([1, 0, 0, 0], [1, 0, 0, 0])
    with pytest.raises(DegeneratePlane):
        Plane([2, 0, 0, 0], [0, 1, 0, 0])
    with pytest.raises(DegeneratePlane):
        Plane([1, 0, 0], [0, 1, 0])
    Plane([1, 0, 0, 0], [0, 1e-9, 1, 0])


def test_orthogonal_plane():
    rng = np.random.default_rng(0)
    for _ in range(100):
        p = random_plane(rng)
        q = orthogonal_plane(p)
        f = np.column_stack([p.u, p.v, q.u, q.v])
        assert np.abs(f.T @ f - np.eye(4)).max() <= 1e-12
        assert np.linalg.det(f) > 0
        assert np.allclose(q.area_form().vec, hodge_star(p.area_form()).vec, atol=1e-12)


def test_sectional_examples():
    e = np.eye(4)
    op = model_operator("sphere4")
    assert sectional(op, Plane(e[0], e[1])) == pytest.approx(1, abs=1e-9)
    op = model_operator("fubini_study", p=(0, 0, 0, 0))
    # complex line at the origin: holomorphic sectional curvature 4
    assert sectional(op, Plane(e[0], e[1])) == pytest.approx(4, abs=1e-9)
    assert sectional(op, Plane(e[0], e[2])) == pytest.approx(1, abs=1e-9)


@pytest.mark.parametrize("seed", range(30))
def test_biorthogonal_matches_formula(seed):
    op = random_curvature(seed)
    rng = np.random.default_rng(seed)
    rt = op.biortho_matrix()
    for _ in range(20):
        p = random_plane(rng)
        w = p.area_form().vec
        assert biorthogonal(op, p) == pytest.approx(w @ rt @ w, abs=1e-12)


def test_closed_form_examples():
    sd = spectra(model_operator("sphere4"))
    ext = kperp_extremes_closed(sd)
    assert ext.kperp1 == pytest.approx(1, abs=1e-9) and ext.kperp3 == pytest.approx(1, abs=1e-9)
    sd = spectra(model_operator("fubini_study"))
    ext = kperp_extremes_closed(sd)
    assert ext.kperp1 == pytest.approx(1, abs=1e-8) and ext.kperp3 == pytest.approx(4, abs=1e-8)
    sd = spectra(model_operator("s2xs2"))
    ext = kperp_extremes_closed(sd)
    assert ext.kperp1 == pytest.approx(0, abs=1e-8) and ext.kperp3 == pytest.approx(1, abs=1e-8)


@pytest.mark.parametrize("seed", range(40))
def test_closed_form_planes_attain_extremes(seed):
    op = random_curvature(seed)
    ext = kperp_extremes_closed(spectra(op))
    assert biorthogonal(op, ext.argmin) == pytest.approx(ext.kperp1, abs=1e-8)
    assert biorthogonal(op, ext.argmax) == pytest.approx(ext.kperp3, abs=1e-8)


@pytest.mark.parametrize("seed", range(40))
def test_search_agrees_with_closed_form(seed):
    op = random_curvature(seed, "general" if seed % 2 else "einstein")
    closed = kperp_extremes_closed(spectra(op))
    found = kperp_extremes_search(op, n_samples=200, seed=seed)
    assert abs(found.kperp1 - closed.kperp1) <= 1e-8
    assert abs(found.kperp3 - closed.kperp3) <= 1e-8
    # the reported planes attain the reported values
    assert biorthogonal(op, found.argmin) == pytest.approx(found.kperp1, abs=1e-8)
    assert biorthogonal(op, found.argmax) == pytest.approx(found.kperp3, abs=1e-8)


@pytest.mark.parametrize("name", ["sphere4", "fubini_study", "s2xs2", "fs_perturbed"])
def test_search_on_models(name):
    params = {"t": 0.3} if name == "fs_perturbed" else {}
    op = model_operator(name, **params)
    closed = kperp_extremes_closed(spectra(op))
    found = kperp_extremes_search(op, n_samples=300, seed=1)
    assert abs(found.kperp1 - closed.kperp1) <= 1e-8
    assert abs(found.kperp3 - closed.kperp3) <= 1e-8


def test_search_is_deterministic():
    op = random_curvature(5)
    a = kperp_extremes_search(op, n_samples=100, seed=3)
    b = kperp_extremes_search(op, n_samples=100, seed=3)
    assert a.kperp1 == b.kperp1 and a.kperp3 == b.kperp3
    assert np.array_equal(a.argmin.u, b.argmin.u)


def test_python_backend_scan_matches_direct_evaluation():
    op = random_curvature(6)
    rt = op.biortho_matrix()
    frames = random_frames(np.random.default_rng(0), 50)
    values = kernels.python_backend.scan(rt.tolist(), frames.tolist())
    for f, v in zip(frames, values):
        w = TwoFormPoint.wedge_vectors(f[0], f[1]).vec
        assert v == pytest.approx(w @ rt @ w, abs=1e-13)


@needs_compiled
def test_backends_agree():
    py, cy = kernels.python_backend, kernels.compiled_backend
    for seed in range(20):
        op = random_curvature(seed)
        rt = np.ascontiguousarray(op.biortho_matrix())
        frames = random_frames(np.random.default_rng(seed), 100)
        a = np.asarray(py.scan(rt.tolist(), frames.tolist()))
        b = np.asarray(cy.scan(rt, frames))
        assert np.abs(a - b).max() <= 1e-14
        for sign in (-1.0, 1.0):
            va, _ = py.refine(rt.tolist(), frames[0].tolist(), sign, 50, 1e-15)
            vb, _ = cy.refine(rt, frames[0].tolist(), sign, 50, 1e-15)
            assert abs(va - vb) <= 1e-12
        found_py = kperp_extremes_search(op, n_samples=100, seed=seed, backend=py)
        found_cy = kperp_extremes_search(op, n_samples=100, seed=seed, backend=cy)
        assert abs(found_py.kperp1 - found_cy.kperp1) <= 1e-12
        assert abs(found_py.kperp3 - found_cy.kperp3) <= 1e-12


def _report_for(name, **params):
    model = builtin(name, **params)
    pts = []
    for p in model.metric.domain.random(5, np.random.default_rng(0)):
        sd = spectra(curvature_operator(riemann(model.metric, p)))
        pts.append((sd, kperp_extremes_closed(sd, with_planes=False)))
    return hypothesis_report(pts)


def test_report_on_fubini_study():
    rep = _report_for("fubini_study")
    agg = rep.aggregate
    assert agg["kperp1_positive"] and agg["scalar_positive"] and agg["minus_positive"]
    # K_perp_max = 4 < s/4 = 6
    assert agg["kperp3_below_quarter_s"] and agg["r_sums_positive"]
    assert not agg["plus_positive"]
    assert rep.dichotomy == "minus"
    assert rep.consistency_errors == []


def test_report_on_flat_and_product():
    rep = _report_for("flat4")
    assert not any(rep.aggregate.values())
    assert rep.dichotomy == "neither"
    rep = _report_for("s2xs2")
    assert not rep.aggregate["kperp1_positive"]
    assert rep.aggregate["scalar_positive"]
    assert rep.consistency_errors == []


def test_report_on_sphere():
    rep = _report_for("sphere4")
    assert all(rep.aggregate.values())
    assert rep.dichotomy == "both"


def test_report_edge_cases():
    with pytest.raises(EmptySample):
        hypothesis_report([])
    sd = spectra(model_operator("sphere4"))
    rep = hypothesis_report([(sd, kperp_extremes_closed(sd)), None])
    assert rep.points[1] is None
    assert not any(rep.aggregate.values())
    d = rep.as_dict()
    assert d["points"][0]["verdicts"]["kperp1_positive"]


def test_margin_is_respected():
    sd = spectra(model_operator("sphere4"))
    ext = kperp_extremes_closed(sd)
    rep = hypothesis_report([(sd, ext)], margin=2.0)
    assert not rep.aggregate["kperp1_positive"]
    assert rep.aggregate["scalar_positive"]
