"""Almost-Kahler data: symplectic checks, the compatible J, conformal rescaling."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import exprlang as ex
from .errors import NotNormalized, NotSelfDual, VanishingForm
from .geometry import DIM, MetricField, check_spd, orthonormal_frame, to_frame
from .hodgeops import TwoFormField, coordinate_star
from .lambda2 import TwoFormPoint, hodge_star, sd_asd_split, wedge

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class SymplecticCheck:
    selfdual: bool
    length: float
    volume_identity_residual: float


def check_symplectic_pointwise(omega: TwoFormPoint, margin=1e-9) -> SymplecticCheck:
    """Self-duality, length and the residual of w^w = |w|^2 vol (frame components)."""
    length = omega.norm()
    return SymplecticCheck(
        selfdual=(omega - hodge_star(omega)).norm() <= margin,
        length=length,
        volume_identity_residual=abs(wedge(omega, omega) - length * length),
    )


def framed_form(omega_coord, g, orientation=1) -> TwoFormPoint:
    """Frame components of a 2-form given in coordinates."""
    return TwoFormPoint.from_matrix(to_frame(np.asarray(omega_coord), orthonormal_frame(g, orientation)))


@dataclass(frozen=True)
class AlmostComplexStructure:
    """J in coordinates, with the metric and form it was built from."""

    J: np.ndarray
    metric: np.ndarray
    omega: np.ndarray

    def defects(self, rng=None, samples=64):
        """Worst violation of each compatibility condition over random vectors.

        ``positivity`` is the smallest value of w(x, Jx) over unit x and must
        be positive; the others must vanish.
        """
        rng = np.random.default_rng(0) if rng is None else rng
        J, g, w = self.J, self.metric, self.omega
        xs = rng.standard_normal((samples, DIM))
        ys = rng.standard_normal((samples, DIM))
        out = {
            "square": float(np.abs(J @ J + np.eye(DIM)).max()),
            "metric": float(np.abs(J.T @ g @ J - g).max()),
            "form": float(np.abs(J.T @ w @ J - w).max()),
            "skew": float(np.abs(g @ J + (g @ J).T).max()),
        }
        pair_g = np.einsum("ni,ij,nj->n", xs @ J.T, g, ys @ J.T) - np.einsum("ni,ij,nj->n", xs, g, ys)
        pair_w = np.einsum("ni,ij,nj->n", xs @ J.T, w, ys @ J.T) - np.einsum("ni,ij,nj->n", xs, w, ys)
        out["metric_pairs"] = float(np.abs(pair_g).max())
        out["form_pairs"] = float(np.abs(pair_w).max())
        norms = np.sqrt(np.einsum("ni,ij,nj->n", xs, g, xs))
        out["positivity"] = float(np.min(np.einsum("ni,ij,nj->n", xs, w, xs @ J.T) / norms ** 2))
        return out


def build_acs(g_p, omega_p, tol=1e-8, orientation=1) -> AlmostComplexStructure:
    """J with g(Jx, y) = w(x, y), i.e. J = -g^-1 w in coordinates.

    ``omega_p`` is a coordinate matrix or a TwoFormPoint; with g_p = I both
    readings coincide with frame components.  For a self-dual w of length
    sqrt 2 this J already squares to -1.
    """
    g = np.asarray(g_p, dtype=float)
    check_spd(g)
    w = omega_p.matrix if isinstance(omega_p, TwoFormPoint) else np.asarray(omega_p, dtype=float)
    framed = TwoFormPoint.from_matrix(to_frame(w, orthonormal_frame(g, orientation)))
    plus, minus = sd_asd_split(framed)
    if minus.norm() > tol * max(1.0, framed.norm()):
        raise NotSelfDual(f"anti-self-dual part has norm {minus.norm():.3e}")
    if abs(framed.norm() - SQRT2) > tol:
        raise NotNormalized(f"|w| = {framed.norm():.12g}, expected sqrt(2)")
    J = -np.linalg.solve(g, w)
    acs = AlmostComplexStructure(J, g, w)
    square = np.abs(J @ J + np.eye(DIM)).max()
    if square > 1e3 * tol:  # pragma: no cover - guaranteed by the two checks above
        raise NotNormalized(f"J^2 + 1 = {square:.3e}")
    return acs


def _symbolic_inverse(m):
    """Adjugate and determinant of a 4x4 expression matrix."""
    n = len(m)

    def det(rows, cols):
        if len(rows) == 1:
            return m[rows[0]][cols[0]]
        total = ex.ZERO
        for k, c in enumerate(cols):
            entry = m[rows[0]][c]
            if entry is ex.ZERO:
                continue
            minor = det(rows[1:], cols[:k] + cols[k + 1 :])
            term = entry * minor
            total = total - term if k % 2 else total + term
        return total

    full = list(range(n))
    determinant = det(full, full)
    adj = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            rows = [r for r in full if r != j]
            cols = [c for c in full if c != i]
            cof = det(rows, cols)
            adj[i][j] = cof if (i + j) % 2 == 0 else ex.neg(cof)
    return adj, determinant


def form_norm_expr(metric: MetricField, omega: TwoFormField):
    """|w|_g as an expression: sqrt(1/2 g^ia g^jb w_ij w_ab)."""
    adj, det = _symbolic_inverse([list(r) for r in metric.components])
    total = ex.ZERO
    for i in range(DIM):
        for j in range(DIM):
            wij = omega.component(i, j)
            if wij is ex.ZERO:
                continue
            for a in range(DIM):
                if adj[i][a] is ex.ZERO:
                    continue
                for b in range(DIM):
                    wab = omega.component(a, b)
                    if wab is ex.ZERO or adj[j][b] is ex.ZERO:
                        continue
                    total = total + adj[i][a] * adj[j][b] * wij * wab
    return ex.sqrt(ex.const(0.5) * total / det ** 2)


@dataclass
class ConformalFactor:
    """u^2 as an expression; its values must stay positive on the domain."""

    expr: ex.Expr

    def values(self, points):
        fn = ex.compile_exprs([self.expr])
        return np.array([fn(tuple(p))[0] for p in points])


def conformal_normalize(metric: MetricField, omega: TwoFormField, points, tol=1e-12):
    """u^2 = |w|_g / sqrt 2 and g' = u^2 g, so that |w|_{g'} = sqrt 2.

    ``points`` are the sample points where |w|_g must stay above ``tol``.
    """
    norm = form_norm_expr(metric, omega)
    fn = ex.compile_exprs([norm])
    for p in points:
        if fn(tuple(float(c) for c in p))[0] <= tol:
            raise VanishingForm(f"|w|_g vanishes at {tuple(p)}")
    u2 = ConformalFactor(norm / ex.const(SQRT2))
    return u2, metric.scaled(u2.expr)


def pointwise_form_length(metric: MetricField, omega: TwoFormField, p):
    g = metric.values(p)
    return framed_form(omega.values(p), g, metric.orientation).norm()


def star_conformal_invariance(metric: MetricField, factor, alpha: TwoFormField, points) -> float:
    """max |*_g a - *_{u^2 g} a| over ``points`` in coordinate components."""
    factor_fn = ex.compile_exprs([ex.as_expr(factor)])
    worst = 0.0
    for p in points:
        p = tuple(float(c) for c in p)
        g = metric.values(p)
        u2 = factor_fn(p)[0]
        a = alpha.values(p)
        diff = coordinate_star(a, g, metric.orientation) - coordinate_star(a, u2 * g, metric.orientation)
        worst = max(worst, float(np.abs(diff).max()))
    return worst
