import numpy as np
import pytest

from curv4.curvspec import (
    CurvatureOperator,
    curvature_operator,
    positivity_check,
    random_curvature,
    random_spectra,
    spectra,
)
from curv4.geometry import riemann, symmetry_defect
from curv4.lambda2 import BASIS_PAIRS, TwoFormPoint, hodge_star, self_dual_coords
from curv4.models import builtin

MODELS = [("flat4", {}), ("sphere4", {}), ("fubini_study", {}), ("s2xs2", {}), ("fs_perturbed", {"t": 0.2})]


def operator_to_riemann(op):
    """Rebuild R_ijkl from the operator (inverse of the 6x6 assembly)."""
    r = np.zeros((4, 4, 4, 4))
    for a, (i, j) in enumerate(BASIS_PAIRS):
        for b, (k, l) in enumerate(BASIS_PAIRS):
            v = op.matrix[a, b]
            for (p, q, sign1) in ((i, j, 1), (j, i, -1)):
                for (m, n, sign2) in ((l, k, 1), (k, l, -1)):
                    r[p, q, m, n] = sign1 * sign2 * v
    return r


def unit_plane(rng):
    q = np.linalg.qr(rng.standard_normal((4, 4)))[0]
    if np.linalg.det(q) < 0:
        q[:, 3] = -q[:, 3]
    return q


@pytest.mark.parametrize("name, params", MODELS)
def test_operator_entries_and_calibration(name, params):
    model = builtin(name, **params)
    rng = np.random.default_rng(0)
    for p in model.metric.domain.random(5, rng):
        cp = riemann(model.metric, p)
        op = curvature_operator(cp)
        assert op.symmetry_defect() <= 1e-10
        assert np.trace(op.matrix) == pytest.approx(cp.scalar / 2, abs=1e-9)
        assert np.abs(operator_to_riemann(op) - cp.riemann).max() <= 1e-9
        for _ in range(100):
            q = unit_plane(rng)
            u, v = q[:, 0], q[:, 1]
            w = TwoFormPoint.wedge_vectors(u, v)
            k_p = cp.sectional(u, v)
            assert op.quadratic(w) == pytest.approx(k_p, abs=1e-9)
            k_perp = cp.sectional(q[:, 2], q[:, 3])
            # sqrt2 w = phi + psi with phi, psi unit (anti-)self-dual
            plus, minus = self_dual_coords(w)
            phi, psi = plus / np.linalg.norm(plus), minus / np.linalg.norm(minus)
            rhs = cp.scalar / 6 + phi @ op.w_plus @ phi + psi @ op.w_minus @ psi
            assert k_p + k_perp == pytest.approx(rhs, abs=1e-8)


def test_sphere_operator_is_identity():
    op = curvature_operator(riemann(builtin("sphere4").metric, (0.3, 0.1, -0.2, 0.4)))
    assert np.abs(op.matrix - np.eye(6)).max() <= 1e-9
    sd = spectra(op)
    assert np.abs(sd.lambda_plus).max() <= 1e-9 and np.abs(sd.lambda_minus).max() <= 1e-9
    assert np.allclose(sd.r_plus, 4) and np.allclose(sd.r_minus, 4)


def test_flat_operator_is_zero():
    op = curvature_operator(riemann(builtin("flat4").metric, (0.3, 0.1, 0.2, 0.4)))
    assert np.abs(op.matrix).max() == 0.0


def test_fubini_study_spectra():
    op = curvature_operator(riemann(builtin("fubini_study").metric, (0.2, -0.4, 0.1, 0.3)))
    sd = spectra(op)
    assert np.allclose(sd.lambda_plus, [-2, -2, 4], atol=1e-8)
    assert np.abs(sd.lambda_minus).max() <= 1e-8
    assert np.abs(op.w_minus).max() <= 1e-8
    assert np.abs(op.B).max() <= 1e-8
    assert np.allclose(sd.r_plus, [12, 12, 0], atol=1e-7)
    assert np.allclose(sd.r_minus, [8, 8, 8], atol=1e-7)
    assert not positivity_check(sd.s, op.w_plus, 1e-9).positive
    minus = positivity_check(sd.s, op.w_minus, 1e-9)
    assert minus.positive and minus.smallest == pytest.approx(8, abs=1e-7)


def test_einstein_block_vanishes_only_for_einstein_models():
    op = curvature_operator(riemann(builtin("fs_perturbed", t=0.3).metric, (0.1, 0.1, 0.1, 0.1)))
    assert np.abs(op.B).max() > 1e-3


def test_positivity_boundaries():
    assert not positivity_check(0.0, np.zeros((3, 3))).positive
    v = positivity_check(12.0, np.zeros((3, 3)))
    assert v.positive and v.smallest == pytest.approx(4)


@pytest.mark.parametrize("mode", ["general", "einstein", "selfdual-weyl-only"])
def test_random_curvature_is_algebraic(mode):
    for seed in range(50):
        op = random_curvature(seed, mode)
        assert np.array_equal(op.matrix, random_curvature(seed, mode).matrix)
        r = operator_to_riemann(op)
        assert symmetry_defect(r) <= 1e-12
        sd = spectra(op)
        assert max(sd.invariant_defects().values()) <= 1e-9
        if mode != "general":
            assert np.abs(op.B).max() <= 1e-15
        if mode == "selfdual-weyl-only":
            assert np.abs(op.w_minus).max() <= 1e-15


def test_eigenforms_are_unit_and_have_duality():
    for seed in range(20):
        sd = spectra(random_curvature(seed))
        for k in range(3):
            a, b = sd.eigenforms_plus[k], sd.eigenforms_minus[k]
            assert a.norm() == pytest.approx(1, abs=1e-14) and b.norm() == pytest.approx(1, abs=1e-14)
            assert np.allclose(hodge_star(a).vec, a.vec) and np.allclose(hodge_star(b).vec, -b.vec)
            v = a.vec
            assert v[np.argmax(np.abs(v))] > 0


def test_scaling_covariance():
    op = random_curvature(3)
    sd = spectra(op)
    sd2 = spectra(op.scaled(2.5))
    assert sd2.s == pytest.approx(2.5 * sd.s)
    assert np.allclose(sd2.lambda_plus, 2.5 * sd.lambda_plus)
    assert np.allclose(sd2.lambda_minus, 2.5 * sd.lambda_minus)


def test_from_blocks_round_trip():
    op = random_curvature(4)
    again = CurvatureOperator.from_blocks(op.A, op.B, op.C)
    assert np.allclose(again.matrix, op.matrix, atol=1e-14)


def test_random_spectra_satisfy_invariants():
    s, lp, lm = random_spectra(0, 1000)
    for lam in (lp, lm):
        assert np.abs(lam.sum(axis=1)).max() <= 1e-12
        assert np.all(np.diff(lam, axis=1) >= 0)
        assert np.all(lam[:, 0] <= 0) and np.all(lam[:, 2] >= 0)
        assert np.all(-0.5 * lam[:, 0] <= lam[:, 2] + 1e-12)
        assert np.all(lam[:, 2] <= -2 * lam[:, 0] + 1e-12)


def test_pointwise_sum_inequality_implies_positive_r_sums():
    s, lp, lm = random_spectra(1, 100_000)
    hyp = 2 * s / 3 - 2 * lp[:, 2] - 2 * lm[:, 2] > 0
    r_sums = (s[:, None] / 3 - 2 * lp)[:, :, None] + (s[:, None] / 3 - 2 * lm)[:, None, :]
    assert hyp.sum() > 1000
    assert np.all(r_sums[hyp].reshape(-1, 9).min(axis=1) > 0)
