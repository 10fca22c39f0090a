"""Exterior calculus of form fields on a chart, evaluated pointwise.

Everything is computed from 2-jets (value, first and second partials) of
the metric and the form, obtained by symbolic differentiation.  Second
covariant derivatives are assembled from those jets, and the Hodge
Laplacian, the rough Laplacian and the codifferential are contractions of
them:

    (delta w)_j  = -g^kl nabla_l w_kj          (delta = -*d* on 2-forms)
    Delta        = d delta + delta d
    nabla*nabla w = -g^kl nabla_k nabla_l w
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import exprlang as ex
from .curvspec import curvature_operator
from .errors import MixedDuality
from .geometry import (
    DIM,
    JetFunction,
    MetricField,
    check_spd,
    connection_from_jet,
    curvature_from_jet,
    orthonormal_frame,
    to_frame,
)
from .lambda2 import TwoFormPoint, sd_asd_split

LEVI = np.zeros((DIM,) * DIM)
for _perm in itertools.permutations(range(DIM)):
    _inv = sum(1 for a in range(DIM) for b in range(a + 1, DIM) if _perm[a] > _perm[b])
    LEVI[_perm] = -1.0 if _inv % 2 else 1.0

_UPPER = [(i, j) for i in range(DIM) for j in range(i + 1, DIM)]


class OneFormField:
    def __init__(self, components):
        if len(components) != DIM:
            raise ValueError("a 1-form has four components")
        self.components = tuple(ex.as_expr(c) for c in components)
        self._fn = None

    def values(self, p):
        if self._fn is None:
            self._fn = ex.compile_exprs(self.components)
        return np.asarray(self._fn(tuple(float(c) for c in p)))


class TwoFormField:
    """Antisymmetric matrix of expressions; only i < j is stored."""

    def __init__(self, upper):
        comps = {}
        for (i, j), e in upper.items():
            if not 0 <= i < j < DIM:
                raise ValueError(f"component index ({i}, {j}) must satisfy 0 <= i < j < 4")
            comps[i, j] = ex.as_expr(e)
        self.upper = {ij: comps.get(ij, ex.ZERO) for ij in _UPPER}
        self._jet = None
        self._values = None

    @classmethod
    def from_dict(cls, components):
        """Build from 1-based keys, e.g. ``{(1, 2): "sin(x1)"}``; (j, i) flips sign."""
        upper = {}
        for (i, j), e in components.items():
            e = ex.as_expr(e)
            if i > j:
                i, j, e = j, i, ex.neg(e)
            upper[i - 1, j - 1] = upper.get((i - 1, j - 1), ex.ZERO) + e
        return cls(upper)

    def component(self, i, j):
        if i == j:
            return ex.ZERO
        if i < j:
            return self.upper[i, j]
        return ex.neg(self.upper[j, i])

    def scaled(self, factor):
        factor = ex.as_expr(factor)
        return TwoFormField({ij: factor * e for ij, e in self.upper.items()})

    def __add__(self, other):
        return TwoFormField({ij: self.upper[ij] + other.upper[ij] for ij in _UPPER})

    def values(self, p):
        if self._values is None:
            self._values = ex.compile_exprs([self.upper[ij] for ij in _UPPER])
        return _antisym(np.asarray(self._values(tuple(float(c) for c in p))))

    def jet(self, p):
        """Components w[i,j], d_k w_ij as dw[k,i,j], d_k d_l w_ij as ddw[k,l,i,j]."""
        if self._jet is None:
            self._jet = JetFunction([self.upper[ij] for ij in _UPPER])
        v, d, dd = self._jet(p)
        w = _antisym(v)
        dw = np.stack([_antisym(d[k]) for k in range(DIM)])
        ddw = np.empty((DIM, DIM, DIM, DIM))
        for k in range(DIM):
            for l in range(DIM):
                ddw[k, l] = _antisym(dd[k, l])
        return w, dw, ddw


class ThreeFormField:
    """Antisymmetric 3-index expression array; stores i < j < k."""

    def __init__(self, upper):
        self.upper = {ijk: ex.as_expr(e) for ijk, e in upper.items()}
        self._fn = None

    def values(self, p):
        keys = sorted(self.upper)
        if self._fn is None:
            self._fn = ex.compile_exprs([self.upper[k] for k in keys])
        vals = self._fn(tuple(float(c) for c in p))
        out = np.zeros((DIM, DIM, DIM))
        for (i, j, k), v in zip(keys, vals):
            for perm in itertools.permutations(range(3)):
                idx = tuple((i, j, k)[a] for a in perm)
                out[idx] = v * LEVI[perm + (3,)]
        return out


def _antisym(v):
    m = np.zeros((DIM, DIM))
    for (i, j), val in zip(_UPPER, v):
        m[i, j] = val
        m[j, i] = -val
    return m


# --- exterior derivative (metric free)

def exterior_d_field(form):
    """Symbolic exterior derivative of a 1-form or 2-form field."""
    if isinstance(form, OneFormField):
        a = form.components
        return TwoFormField(
            {(i, j): ex.differentiate(a[j], i) - ex.differentiate(a[i], j) for i, j in _UPPER}
        )
    if isinstance(form, TwoFormField):
        upper = {}
        for i, j, k in itertools.combinations(range(DIM), 3):
            upper[i, j, k] = (
                ex.differentiate(form.component(j, k), i)
                + ex.differentiate(form.component(k, i), j)
                + ex.differentiate(form.component(i, j), k)
            )
        return ThreeFormField(upper)
    raise TypeError("exterior_d_field expects a OneFormField or TwoFormField")


def exterior_d(form: TwoFormField, p):
    """(dw)_ijk = d_i w_jk + d_j w_ki + d_k w_ij at ``p``."""
    _, dw, _ = form.jet(p)
    return (
        dw
        + np.einsum("jki->ijk", dw)
        + np.einsum("kij->ijk", dw)
    )


# --- pointwise Hodge star on coordinate components

def frame_star(alpha):
    """Hodge star of a totally antisymmetric array in an oriented orthonormal frame."""
    k = alpha.ndim
    letters = "abcd"
    subscripts = letters[:k] + "," + letters + "->" + letters[k:]
    return np.einsum(subscripts, alpha, LEVI) / math.factorial(k)


def coordinate_star(alpha, g, orientation=1):
    """Hodge star of coordinate components ``alpha`` for the metric ``g``."""
    frame = orthonormal_frame(g, orientation)
    coframe = np.linalg.inv(frame)
    starred = frame_star(to_frame(alpha, frame))
    return to_frame(starred, coframe)


def form_norm(alpha, g):
    """Pointwise norm of a k-form given by coordinate components."""
    frame = orthonormal_frame(g)
    a = to_frame(alpha, frame)
    return math.sqrt(float(np.sum(a * a)) / math.factorial(alpha.ndim))


# --- covariant derivatives from jets

@dataclass
class FormJets:
    g: np.ndarray
    ginv: np.ndarray
    gamma: np.ndarray
    w: np.ndarray
    nabla: np.ndarray  # nabla_b w_ij as [b, i, j]
    nabla2: np.ndarray  # nabla_a nabla_b w_ij as [a, b, i, j]
    metric_jet: tuple


def form_jets(form: TwoFormField, metric: MetricField, p) -> FormJets:
    g, dg, ddg = metric.jet(p)
    check_spd(g, tuple(float(c) for c in p))
    ginv, gam, dgam = connection_from_jet(g, dg, ddg)
    w, dw, ddw = form.jet(p)
    t = dw - np.einsum("mbi,mj->bij", gam, w) - np.einsum("mbj,im->bij", gam, w)
    dt = (
        ddw
        - np.einsum("ambi,mj->abij", dgam, w)
        - np.einsum("mbi,amj->abij", gam, dw)
        - np.einsum("ambj,im->abij", dgam, w)
        - np.einsum("mbj,aim->abij", gam, dw)
    )
    tt = (
        dt
        - np.einsum("mab,mij->abij", gam, t)
        - np.einsum("mai,bmj->abij", gam, t)
        - np.einsum("maj,bim->abij", gam, t)
    )
    return FormJets(g, ginv, gam, w, t, tt, (g, dg, ddg))


def covariant_derivative(form, metric, p):
    """nabla_k w_ij as an array indexed [k, i, j]."""
    return form_jets(form, metric, p).nabla


def codifferential(form, metric, p):
    j = form_jets(form, metric, p)
    return -np.einsum("kl,lkj->j", j.ginv, j.nabla)


def _laplacians(j: FormJets):
    tt = j.nabla2
    d_delta = -np.einsum("kl,alkb->ab", j.ginv, tt)
    d_delta = d_delta - d_delta.T
    delta_d = -np.einsum(
        "kl,lkab->ab",
        j.ginv,
        tt + np.einsum("labk->lkab", tt) + np.einsum("lbka->lkab", tt),
    )
    rough = -np.einsum("kl,klij->ij", j.ginv, tt)
    return d_delta + delta_d, rough


def hodge_laplacian(form, metric, p):
    """(d delta + delta d) w at ``p`` as antisymmetric coordinate components."""
    return _laplacians(form_jets(form, metric, p))[0]


def rough_laplacian(form, metric, p):
    return _laplacians(form_jets(form, metric, p))[1]


@dataclass(frozen=True)
class WeitzenboeckReport:
    point: tuple
    duality: str
    d_norm: float
    delta_norm: float
    laplacian_norm: float
    nabla_norm: float
    residual: float


def weitzenboeck_residual(form, metric, p, tol=1e-9) -> WeitzenboeckReport:
    """Check Delta w = nabla*nabla w - 2 W(w) + (s/3) w for a (anti-)self-dual w.

    W acts through the Weyl block matching the duality of ``w`` at ``p``.
    Raises MixedDuality when both halves exceed ``tol * max(1, |w|)``.
    """
    point = tuple(float(c) for c in p)
    j = form_jets(form, metric, p)
    g, dg, ddg = j.metric_jet
    cp = curvature_from_jet(g, dg, ddg, metric.orientation, point)
    frame = cp.frame

    def framed(m):
        return TwoFormPoint.from_matrix(to_frame(m, frame))

    w = framed(j.w)
    plus, minus = sd_asd_split(w)
    scale = tol * max(1.0, w.norm())
    if plus.norm() > scale and minus.norm() > scale:
        raise MixedDuality(f"|w+| = {plus.norm():.3e}, |w-| = {minus.norm():.3e} at {point}")
    duality = "self-dual" if minus.norm() <= scale else "anti-self-dual"
    op = curvature_operator(cp)
    weyl = op.weyl_matrix()
    lap, rough = _laplacians(j)
    lap_f = framed(lap)
    rough_f = framed(rough)
    rhs = rough_f.vec - 2.0 * weyl @ w.vec + cp.scalar / 3.0 * w.vec
    nabla_f = to_frame(j.nabla, frame)
    dw = j.nabla + np.einsum("jki->ijk", j.nabla) + np.einsum("kij->ijk", j.nabla)
    delta = -np.einsum("kl,lkj->j", j.ginv, j.nabla)
    return WeitzenboeckReport(
        point=point,
        duality=duality,
        d_norm=math.sqrt(float(np.sum(to_frame(dw, frame) ** 2)) / 6.0),
        delta_norm=float(np.linalg.norm(frame.T @ delta)),
        laplacian_norm=lap_f.norm(),
        nabla_norm=math.sqrt(0.5 * float(np.sum(nabla_f ** 2))),
        residual=float(np.linalg.norm(lap_f.vec - rhs)),
    )
