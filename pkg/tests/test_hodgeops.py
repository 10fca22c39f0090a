import math

import numpy as np
import pytest

from conftest import sd_coordinate_forms
from curv4 import exprlang as ex
from curv4.errors import MixedDuality
from curv4.geometry import DIM, MetricField, christoffel
from curv4.hodgeops import (
    OneFormField,
    TwoFormField,
    codifferential,
    coordinate_star,
    covariant_derivative,
    exterior_d,
    exterior_d_field,
    hodge_laplacian,
    rough_laplacian,
    weitzenboeck_residual,
)
from curv4.models import builtin

X1, X2, X3, X4 = ex.X
FLAT = builtin("flat4").metric


def diag_metric(entries, domain=None):
    z = ex.ZERO
    return MetricField([[ex.as_expr(entries[i]) if i == j else z for j in range(DIM)] for i in range(DIM)], domain)


def fd_derivative(fn, p, h=1e-4):
    """d_k fn at p for an array-valued fn, stacked on a leading axis (Richardson)."""
    p = np.asarray(p, dtype=float)
    out = []
    for k in range(DIM):
        e = np.zeros(DIM)
        e[k] = 1.0

        def central(step):
            return (fn(p + step * e) - fn(p - step * e)) / (2 * step)

        out.append((4 * central(h) - central(2 * h)) / 3)
    return np.stack(out)


def random_form(rng):
    comps = {}
    for i in range(DIM):
        for j in range(i + 1, DIM):
            a, b, c = rng.uniform(-1, 1, 3)
            comps[i, j] = ex.const(round(a, 3)) * ex.sin(ex.const(round(b, 3)) * ex.X[i] + ex.X[(j + 1) % 4]) \
                + ex.const(round(c, 3)) * ex.X[j] * ex.X[i]
    return TwoFormField(comps)


def test_exterior_d_examples():
    const = TwoFormField.from_dict({(1, 2): 2.0, (2, 4): -1.0})
    assert np.abs(exterior_d(const, (0.1, 0.2, 0.3, 0.4))).max() == 0.0
    w = TwoFormField.from_dict({(2, 3): X1})
    dw = exterior_d(w, (0.3, 0.1, 0.2, 0.7))
    assert dw[0, 1, 2] == 1.0 and dw[1, 0, 2] == -1.0 and dw[2, 0, 1] == 1.0
    assert np.count_nonzero(dw) == 6


def test_d_squared_vanishes():
    rng = np.random.default_rng(0)
    for _ in range(20):
        alpha = OneFormField([ex.sin(ex.const(float(rng.uniform(0.5, 2))) * ex.X[k] + ex.X[(k + 1) % 4]) * ex.X[(k + 2) % 4]
                              for k in range(DIM)])
        ddalpha = exterior_d(exterior_d_field(alpha), rng.uniform(-1, 1, 4))
        assert np.abs(ddalpha).max() <= 1e-10
        assert np.abs(exterior_d_field(exterior_d_field(alpha)).values(rng.uniform(-1, 1, 4))).max() <= 1e-10


def test_fubini_study_form_is_closed_parallel_harmonic():
    model = builtin("fubini_study")
    for p in model.metric.domain.random(20, np.random.default_rng(1)):
        assert np.abs(exterior_d(model.form, p)).max() <= 1e-9
        assert np.abs(covariant_derivative(model.form, model.metric, p)).max() <= 1e-7
        assert np.abs(hodge_laplacian(model.form, model.metric, p)).max() <= 1e-7
        rep = weitzenboeck_residual(model.form, model.metric, p)
        assert rep.duality == "self-dual"
        assert rep.residual <= 1e-6 and rep.d_norm <= 1e-9 and rep.delta_norm <= 1e-7


def test_codifferential_examples():
    p = (0.4, 0.3, -0.2, 0.1)
    assert np.abs(codifferential(TwoFormField.from_dict({(1, 3): 3.0}), FLAT, p)).max() == 0.0
    w = TwoFormField.from_dict({(1, 2): ex.sin(X1)})
    delta = codifferential(w, FLAT, p)
    # (delta w)_j = -d_k w_kj: only j = 2 survives, with -cos(x1)
    assert delta == pytest.approx([0, -math.cos(0.4), 0, 0], abs=1e-15)
    closed_sd = TwoFormField.from_dict(sd_coordinate_forms()[1])
    assert np.abs(codifferential(closed_sd, FLAT, p)).max() == 0.0


def _torus_points(n, dims):
    axis = 2 * np.pi * np.arange(n) / n
    grids = np.meshgrid(*([axis] * dims), indexing="ij")
    pts = np.zeros((n ** dims, DIM))
    for k in range(dims):
        pts[:, k] = grids[k].ravel()
    return pts


def _inner2(a, b, ginv):
    return 0.5 * np.einsum("ia,jb,ij,ab->", ginv, ginv, a, b)


@pytest.mark.parametrize("curved", [False, True])
def test_codifferential_is_adjoint_of_d(curved):
    """Integration by parts on the periodic box [0, 2 pi]^4.

    The curved metric depends on x1 only, so the integrals reduce to a
    one-dimensional periodic quadrature that is spectrally accurate.
    """
    if curved:
        metric = diag_metric([ex.const(1.0) + ex.const(0.3) * ex.sin(X1), ex.exp(ex.const(0.2) * ex.cos(X1)),
                              ex.ONE, ex.const(2.0) + ex.cos(X1)])
        alpha = OneFormField([ex.cos(X1), ex.sin(X1) * ex.cos(ex.const(2.0) * X1), ex.sin(X1), ex.cos(ex.const(3.0) * X1)])
        omega = TwoFormField.from_dict({(1, 2): ex.sin(X1), (2, 4): ex.cos(X1) ** 2, (1, 4): ex.sin(ex.const(2.0) * X1)})
        pts = _torus_points(64, 1)
    else:
        metric = FLAT
        alpha = OneFormField([ex.cos(X2), ex.sin(X1 + X3), ex.sin(X4), ex.cos(X2 - X1)])
        # d alpha has dx12 component sin(x2) and dx23 component -cos(x1 + x3)
        omega = TwoFormField.from_dict({(1, 2): ex.sin(X2) + ex.sin(X2 + X3), (2, 3): ex.cos(X1) - ex.cos(X1 + X3),
                                        (3, 4): ex.sin(X1 - X4)})
        pts = _torus_points(8, 4)
    dalpha = exterior_d_field(alpha)
    lhs = rhs = 0.0
    for p in pts:
        g = metric.values(p)
        ginv = np.linalg.inv(g)
        vol = math.sqrt(np.linalg.det(g))
        lhs += _inner2(dalpha.values(p), omega.values(p), ginv) * vol
        rhs += alpha.values(p) @ ginv @ codifferential(omega, metric, p) * vol
    lhs /= len(pts)
    rhs /= len(pts)
    assert abs(lhs) > 1e-2
    assert abs(lhs - rhs) <= 1e-6


def test_codifferential_is_minus_star_d_star():
    metric = builtin("fs_perturbed", t=0.2).metric
    omega = random_form(np.random.default_rng(2))
    for p in metric.domain.random(5, np.random.default_rng(3)):

        def star_omega(q):
            return coordinate_star(omega.values(q), metric.values(q), metric.orientation)

        d = fd_derivative(star_omega, p)
        d_star = d + np.einsum("jki->ijk", d) + np.einsum("kij->ijk", d)
        oracle = -coordinate_star(d_star, metric.values(p), metric.orientation)
        assert np.abs(oracle - codifferential(omega, metric, p)).max() <= 1e-6


def test_hodge_laplacian_flat_fourier_mode():
    w = TwoFormField.from_dict({(2, 3): ex.sin(X1)})
    for p in [(0.3, 0.1, 0.2, 0.4), (1.2, -0.5, 0.0, 0.9)]:
        assert np.abs(hodge_laplacian(w, FLAT, p) - w.values(p)).max() <= 1e-14
    assert np.abs(hodge_laplacian(TwoFormField.from_dict({(1, 4): 2.0}), FLAT, (0, 0, 0, 0))).max() == 0.0


def test_hodge_laplacian_is_nonnegative_on_flat_fourier_modes():
    rng = np.random.default_rng(4)
    for _ in range(20):
        kvec = rng.integers(-2, 3, 4).astype(float)
        phase = ex.const(0.0)
        for k in range(DIM):
            phase = phase + ex.const(kvec[k]) * ex.X[k]
        i, j = sorted(rng.choice(4, 2, replace=False))
        w = TwoFormField({(int(i), int(j)): ex.cos(phase)})
        p = rng.uniform(-1, 1, 4)
        assert np.allclose(hodge_laplacian(w, FLAT, p), (kvec @ kvec) * w.values(p), atol=1e-12)


def test_covariant_derivative_fd_oracle_on_sphere():
    metric = builtin("sphere4").metric
    omega = TwoFormField.from_dict(sd_coordinate_forms()[0]).scaled(metric.components[0][0])
    omega = omega + random_form(np.random.default_rng(5))
    for p in metric.domain.random(5, np.random.default_rng(6)):
        gam = christoffel(metric, p)
        w = omega.values(p)
        dw = fd_derivative(omega.values, p)
        oracle = dw - np.einsum("mki,mj->kij", gam, w) - np.einsum("mkj,im->kij", gam, w)
        assert np.abs(covariant_derivative(omega, metric, p) - oracle).max() <= 1e-5


def test_rough_laplacian_fd_oracle():
    metric = builtin("fs_perturbed", t=0.25).metric
    omega = random_form(np.random.default_rng(7))
    for p in metric.domain.random(3, np.random.default_rng(8)):
        gam = christoffel(metric, p)
        t = covariant_derivative(omega, metric, p)
        dt = fd_derivative(lambda q: covariant_derivative(omega, metric, q), p)
        nabla2 = (
            dt
            - np.einsum("mab,mij->abij", gam, t)
            - np.einsum("mai,bmj->abij", gam, t)
            - np.einsum("maj,bim->abij", gam, t)
        )
        oracle = -np.einsum("kl,klij->ij", np.linalg.inv(metric.values(p)), nabla2)
        assert np.abs(rough_laplacian(omega, metric, p) - oracle).max() <= 1e-5


def test_flat_weitzenboeck_is_bochner():
    w = TwoFormField.from_dict({(1, 2): ex.sin(X1), (3, 4): ex.sin(X1)})
    for p in FLAT.domain.random(10, np.random.default_rng(9)):
        rep = weitzenboeck_residual(w, FLAT, p)
        assert rep.residual <= 1e-8
        assert rep.laplacian_norm > 0.0


def test_sphere_weitzenboeck_on_random_selfdual_fields():
    metric = builtin("sphere4").metric
    rng = np.random.default_rng(10)
    for form_dict in sd_coordinate_forms():
        coeff = ex.sin(ex.const(float(rng.uniform(0.5, 1.5))) * X1 + X3) + ex.cos(X2 * X4) + ex.X[3] ** 2
        # coordinate self-dual forms are self-dual for any conformally flat metric
        w = TwoFormField.from_dict(form_dict).scaled(coeff)
        for p in metric.domain.random(5, rng):
            rep = weitzenboeck_residual(w, metric, p)
            assert rep.duality == "self-dual"
            assert rep.residual <= 1e-5
            assert rep.nabla_norm > 0.0


def test_weitzenboeck_on_rescaled_kahler_form():
    model = builtin("fubini_study")
    # x1^2 is not pluriharmonic, so f * omega is self-dual but not harmonic
    form = model.form.scaled(ex.ONE + X1 ** 2 + X3)
    for p in model.metric.domain.random(5, np.random.default_rng(13)):
        rep = weitzenboeck_residual(form, model.metric, p)
        assert rep.residual <= 1e-6
        assert rep.laplacian_norm > 1e-3


def test_mixed_duality_is_rejected():
    metric = builtin("fs_perturbed", t=0.2).metric
    with pytest.raises(MixedDuality):
        weitzenboeck_residual(random_form(np.random.default_rng(11)), metric, (0.1, 0.0, 0.2, 0.1))


def test_residual_invariant_under_orientation_flip():
    metric = builtin("sphere4").metric
    flipped = metric.with_orientation(-1)
    w = TwoFormField.from_dict(sd_coordinate_forms()[2]).scaled(ex.cos(X1 + X2))
    p = (0.2, -0.1, 0.3, 0.25)
    a = weitzenboeck_residual(w, metric, p)
    b = weitzenboeck_residual(w, flipped, p)
    assert a.duality == "self-dual" and b.duality == "anti-self-dual"
    assert a.residual == pytest.approx(b.residual, abs=1e-9)
    assert a.laplacian_norm == pytest.approx(b.laplacian_norm, abs=1e-9)
    model = builtin("fubini_study")
    form = model.form.scaled(ex.exp(X3))
    a = weitzenboeck_residual(form, model.metric, p)
    b = weitzenboeck_residual(form, model.metric.with_orientation(-1), p)
    assert a.residual == pytest.approx(b.residual, abs=1e-9)


def test_integrated_identity_on_periodic_flat_box():
    """int <Delta w, w> = int (1/2 Delta |w|^2 + |nabla w|^2) on the flat torus; W = 0, s = 0."""
    w = TwoFormField.from_dict({
        (1, 2): ex.sin(X1 + X3) + ex.cos(X2),
        (1, 3): ex.sin(X2) * ex.cos(X4),
        (3, 4): ex.sin(X1 + X3) + ex.cos(X2),
        (2, 4): ex.cos(X1 - X2),
    })
    sq = ex.ZERO
    for e in w.upper.values():
        sq = sq + e * e
    # positive Laplacian of |w|^2
    lap_sq = ex.compile_exprs([ex.neg(sum((ex.differentiate(ex.differentiate(sq, k), k) for k in range(DIM)), ex.ZERO))])
    pts = _torus_points(8, 4)
    lhs = rhs = half_laplace = 0.0
    for p in pts:
        lap = hodge_laplacian(w, FLAT, p)
        nab = covariant_derivative(w, FLAT, p)
        lhs += 0.5 * np.sum(lap * w.values(p))
        rhs += 0.5 * np.sum(nab * nab)
        half_laplace += 0.5 * lap_sq(tuple(p))[0]
    lhs /= len(pts)
    rhs /= len(pts)
    half_laplace /= len(pts)
    assert rhs > 0.1
    assert abs(lhs - (half_laplace + rhs)) <= 1e-4
    assert abs(half_laplace) <= 1e-4


def test_weitzenboeck_report_entries_are_nonnegative():
    metric = builtin("s2xs2").metric
    model = builtin("s2xs2")
    for p in metric.domain.random(5, np.random.default_rng(12)):
        rep = weitzenboeck_residual(model.form, metric, p)
        for name in ("d_norm", "delta_norm", "laplacian_norm", "nabla_norm", "residual"):
            assert getattr(rep, name) >= 0.0
        assert rep.residual <= 1e-6
