"""Metric fields on a chart and their pointwise curvature.

Curvature convention::

    R(X, Y)Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z - nabla_[X,Y] Z
    R(X, Y, Z, W) = g(R(X, Y)Z, W),    K(X, Y) = R(X, Y, Y, X)

so the round sphere is positively curved.  Every tensor handed to the rest of
the package is expressed in the oriented g-orthonormal frame built by
:func:`orthonormal_frame`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import exprlang as ex
from .errors import NotPositiveDefinite

DIM = 4


class Box:
    """Axis-aligned chart domain ``[lo_i, hi_i]``."""

    def __init__(self, lo, hi):
        self.lo = np.asarray(lo, dtype=float)
        self.hi = np.asarray(hi, dtype=float)
        if self.lo.shape != (DIM,) or self.hi.shape != (DIM,) or np.any(self.hi <= self.lo):
            raise ValueError("box needs four intervals with lo < hi")

    def contains(self, p):
        p = np.asarray(p, dtype=float)
        return bool(np.all(p >= self.lo) and np.all(p <= self.hi))

    def grid(self, n):
        """Cell-centred grid with ``n`` points per axis (interior points only)."""
        axes = [self.lo[k] + (np.arange(n) + 0.5) * (self.hi[k] - self.lo[k]) / n for k in range(DIM)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def random(self, count, rng):
        return self.lo + (self.hi - self.lo) * rng.random((count, DIM))

    def describe(self):
        return {"kind": "box", "lo": self.lo.tolist(), "hi": self.hi.tolist()}


class Ball:
    """Euclidean ball in chart coordinates."""

    def __init__(self, radius, center=(0.0, 0.0, 0.0, 0.0)):
        self.radius = float(radius)
        self.center = np.asarray(center, dtype=float)
        if self.radius <= 0 or self.center.shape != (DIM,):
            raise ValueError("ball needs a positive radius and a 4-vector centre")

    def contains(self, p):
        return bool(np.linalg.norm(np.asarray(p, dtype=float) - self.center) <= self.radius)

    def grid(self, n):
        box = Box(self.center - self.radius, self.center + self.radius)
        pts = box.grid(n)
        return pts[np.linalg.norm(pts - self.center, axis=1) <= self.radius]

    def random(self, count, rng):
        v = rng.standard_normal((count, DIM))
        v /= np.linalg.norm(v, axis=1)[:, None]
        r = self.radius * rng.random(count) ** (1.0 / DIM)
        return self.center + v * r[:, None]

    def describe(self):
        return {"kind": "ball", "radius": self.radius, "center": self.center.tolist()}


class JetFunction:
    """Compiled value, gradient and Hessian of a list of expressions.

    Calling it at ``p`` returns arrays of shape ``(n,)``, ``(4, n)`` and
    ``(4, 4, n)``; the Hessian is symmetric by construction.
    """

    def __init__(self, exprs: Sequence[ex.Expr]):
        exprs = list(exprs)
        self.n = len(exprs)
        first = [[ex.differentiate(e, k) for e in exprs] for k in range(DIM)]
        second = {}
        for k in range(DIM):
            for l in range(k, DIM):
                second[k, l] = [ex.differentiate(d, l) for d in first[k]]
        flat = list(exprs)
        for k in range(DIM):
            flat.extend(first[k])
        self._pairs = sorted(second)
        for kl in self._pairs:
            flat.extend(second[kl])
        self._fn = ex.compile_exprs(flat)

    def __call__(self, p):
        vals = np.asarray(self._fn(tuple(float(c) for c in p)))
        n = self.n
        value = vals[:n]
        grad = vals[n : 5 * n].reshape(DIM, n)
        hess = np.empty((DIM, DIM, n))
        off = 5 * n
        for k, l in self._pairs:
            hess[k, l] = hess[l, k] = vals[off : off + n]
            off += n
        return value, grad, hess


def _pairs_upper():
    return [(i, j) for i in range(DIM) for j in range(i, DIM)]


class MetricField:
    """Symmetric 4x4 matrix of expressions on a chart domain.

    ``orientation`` is the sign attached to dx1^dx2^dx3^dx4.
    """

    def __init__(self, components, domain=None, orientation=1, name=None):
        comps = [[None] * DIM for _ in range(DIM)]
        for i in range(DIM):
            for j in range(DIM):
                a = ex.as_expr(components[i][j])
                b = ex.as_expr(components[j][i])
                if a is not b:
                    raise ValueError(f"metric components g{i+1}{j+1} and g{j+1}{i+1} differ")
                comps[i][j] = a
        if orientation not in (1, -1):
            raise ValueError("orientation must be +1 or -1")
        self.components = tuple(tuple(r) for r in comps)
        self.domain = domain if domain is not None else Box([-1.0] * DIM, [1.0] * DIM)
        self.orientation = orientation
        self.name = name
        self._jet = None
        self._values = None

    def with_orientation(self, orientation):
        return MetricField(self.components, self.domain, orientation, self.name)

    def scaled(self, factor):
        """The conformal metric ``factor * g`` as expressions."""
        factor = ex.as_expr(factor)
        return MetricField(
            [[factor * self.components[i][j] for j in range(DIM)] for i in range(DIM)],
            self.domain,
            self.orientation,
        )

    def values(self, p):
        if self._values is None:
            self._values = ex.compile_exprs([self.components[i][j] for i, j in _pairs_upper()])
        return _unpack_sym(np.asarray(self._values(tuple(float(c) for c in p))))

    def jet(self, p):
        """Metric, first and second coordinate derivatives at ``p``.

        Returns ``g[i,j]``, ``dg[k,i,j] = d_k g_ij`` and
        ``ddg[k,l,i,j] = d_k d_l g_ij``.
        """
        if self._jet is None:
            self._jet = JetFunction([self.components[i][j] for i, j in _pairs_upper()])
        v, d, dd = self._jet(p)
        g = _unpack_sym(v)
        dg = np.stack([_unpack_sym(d[k]) for k in range(DIM)])
        ddg = np.empty((DIM, DIM, DIM, DIM))
        for k in range(DIM):
            for l in range(DIM):
                ddg[k, l] = _unpack_sym(dd[k, l])
        return g, dg, ddg


def _unpack_sym(v):
    m = np.empty((DIM, DIM))
    for (i, j), val in zip(_pairs_upper(), v):
        m[i, j] = m[j, i] = val
    return m


def check_spd(g, point=None):
    try:
        np.linalg.cholesky(g)
    except np.linalg.LinAlgError:
        raise NotPositiveDefinite(point, float(np.linalg.eigvalsh(g)[0])) from None
    smallest = float(np.linalg.eigvalsh(g)[0])
    if smallest <= 0.0:
        raise NotPositiveDefinite(point, smallest)


def metric_at(field: MetricField, p) -> np.ndarray:
    g = field.values(p)
    check_spd(g, tuple(float(c) for c in p))
    return g


def orthonormal_frame(g, orientation=1):
    """Gram-Schmidt on the coordinate basis in the inner product ``g``.

    Columns of the result are the frame vectors in coordinates.  The last
    vector is negated when needed so the frame is positively oriented
    relative to ``orientation``.
    """
    g = np.asarray(g, dtype=float)
    check_spd(g)
    frame = np.zeros((DIM, DIM))
    for k in range(DIM):
        v = np.zeros(DIM)
        v[k] = 1.0
        for j in range(k):
            v = v - (frame[:, j] @ g @ v) * frame[:, j]
        frame[:, k] = v / np.sqrt(v @ g @ v)
    if np.sign(np.linalg.det(frame)) * orientation < 0:
        frame[:, DIM - 1] *= -1.0
    return frame


def connection_from_jet(g, dg, ddg):
    """Inverse metric, Christoffel symbols and their derivatives.

    ``gamma[k,i,j]`` is Gamma^k_ij and ``dgamma[a,k,i,j]`` its d_a derivative.
    """
    ginv = np.linalg.inv(g)
    lower = 0.5 * (np.einsum("ijl->lij", dg) + np.einsum("jil->lij", dg) - dg)
    gamma = np.einsum("kl,lij->kij", ginv, lower)
    dlower = 0.5 * (
        np.einsum("aijl->alij", ddg) + np.einsum("ajil->alij", ddg) - ddg
    )
    dginv = -np.einsum("km,amn,nl->akl", ginv, dg, ginv)
    dgamma = np.einsum("akl,lij->akij", dginv, lower) + np.einsum("kl,alij->akij", ginv, dlower)
    return ginv, gamma, dgamma


def christoffel(field: MetricField, p) -> np.ndarray:
    g, dg, ddg = field.jet(p)
    check_spd(g, tuple(float(c) for c in p))
    return connection_from_jet(g, dg, ddg)[1]


def riemann_coordinates(g, gamma, dgamma):
    """All-lower coordinate components R_ijkl = g(R(d_i, d_j)d_k, d_l)."""
    up = (
        np.einsum("iljk->lijk", dgamma)
        - np.einsum("jlik->lijk", dgamma)
        + np.einsum("lim,mjk->lijk", gamma, gamma)
        - np.einsum("ljm,mik->lijk", gamma, gamma)
    )
    return np.einsum("lm,mijk->ijkl", g, up)


def to_frame(tensor, frame):
    """Contract every index of a covariant coordinate tensor with the frame."""
    out = tensor
    for _ in range(tensor.ndim):
        # contract the leading index and rotate it to the back
        out = np.tensordot(out, frame, axes=([0], [0]))
    return out


@dataclass(frozen=True)
class CurvaturePoint:
    """Pointwise curvature data; tensors are in the orthonormal frame."""

    point: tuple
    metric: np.ndarray
    frame: np.ndarray
    riemann: np.ndarray
    ricci: np.ndarray
    scalar: float
    orientation: int = 1

    def sectional(self, u, v):
        """K(u, v) for frame-orthonormal ``u``, ``v``."""
        return float(np.einsum("ijkl,i,j,k,l->", self.riemann, u, v, v, u))

    def rotated(self, q):
        """Same curvature expressed in the rotated frame ``frame @ q``."""
        return CurvaturePoint(
            self.point,
            self.metric,
            self.frame @ q,
            to_frame(self.riemann, q),
            q.T @ self.ricci @ q,
            self.scalar,
            self.orientation * int(np.sign(np.linalg.det(q))),
        )


def curvature_from_jet(g, dg, ddg, orientation=1, point=None):
    check_spd(g, point)
    _, gamma, dgamma = connection_from_jet(g, dg, ddg)
    frame = orthonormal_frame(g, orientation)
    r = to_frame(riemann_coordinates(g, gamma, dgamma), frame)
    ricci = np.einsum("abca->bc", r)
    return CurvaturePoint(
        point=point,
        metric=g,
        frame=frame,
        riemann=r,
        ricci=ricci,
        scalar=float(np.trace(ricci)),
        orientation=orientation,
    )


def riemann(field: MetricField, p) -> CurvaturePoint:
    """Curvature of ``field`` at ``p`` in its oriented orthonormal frame."""
    g, dg, ddg = field.jet(p)
    return curvature_from_jet(g, dg, ddg, field.orientation, tuple(float(c) for c in p))


def symmetry_defect(r) -> float:
    """Largest violation of the Riemann symmetries and first Bianchi."""
    return float(
        max(
            np.abs(r + np.einsum("jikl->ijkl", r)).max(),
            np.abs(r + np.einsum("ijlk->ijkl", r)).max(),
            np.abs(r - np.einsum("klij->ijkl", r)).max(),
            np.abs(r + np.einsum("iklj->ijkl", r) + np.einsum("iljk->ijkl", r)).max(),
        )
    )
