"""Sectional and biorthogonal curvature of planes, and the hypothesis checks.

For a plane P with unit area form w, K_perp(P) = (K(P) + K(P^perp)) / 2.
Its extremes over all planes have the closed forms

    2 K_perp_min = s/6 + lambda_1^+ + lambda_1^-
    2 K_perp_max = s/6 + lambda_3^+ + lambda_3^-

which :func:`kperp_extremes_search` checks by direct search over the
Grassmannian of 2-planes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .curvspec import CurvatureOperator, SpectralData, positivity_check
from .errors import DegeneratePlane, EmptySample
from .lambda2 import TwoFormPoint, decompose_simple, frame_from_eigenforms, hodge_star

PLANE_TOL = 1e-8
DEFAULT_SAMPLES = 1000
DEFAULT_SWEEPS = 50


@dataclass(frozen=True)
class Plane:
    """Span of two orthonormal frame vectors."""

    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float)
        v = np.asarray(self.v, dtype=float)
        defect = max(abs(u @ u - 1.0), abs(v @ v - 1.0), abs(u @ v))
        if u.shape != (4,) or v.shape != (4,) or defect > PLANE_TOL:
            raise DegeneratePlane(f"plane vectors are not orthonormal (defect {defect:.3e})")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)

    def area_form(self) -> TwoFormPoint:
        return TwoFormPoint.wedge_vectors(self.u, self.v)

    def projector(self):
        return np.outer(self.u, self.u) + np.outer(self.v, self.v)


def sectional(op: CurvatureOperator, plane: Plane) -> float:
    return op.quadratic(plane.area_form())


def orthogonal_plane(plane: Plane) -> Plane:
    """Complement (u', v') with (u, v, u', v') positively oriented."""
    f3, f4 = decompose_simple(hodge_star(plane.area_form()))
    return Plane(f3, f4)


def biorthogonal(op: CurvatureOperator, plane: Plane) -> float:
    return 0.5 * (sectional(op, plane) + sectional(op, orthogonal_plane(plane)))


@dataclass
class KperpExtremes:
    kperp1: float
    kperp3: float
    argmin: Plane | None = None
    argmax: Plane | None = None


def kperp_extremes_closed(sd: SpectralData, with_planes=True) -> KperpExtremes:
    """Extremes from the spectra; the attaining planes come from the eigenforms."""
    k1 = 0.5 * (sd.s / 6.0 + sd.lambda_plus[0] + sd.lambda_minus[0])
    k3 = 0.5 * (sd.s / 6.0 + sd.lambda_plus[2] + sd.lambda_minus[2])
    argmin = argmax = None
    if with_planes and sd.eigenforms_plus and sd.eigenforms_minus:
        fmin = frame_from_eigenforms(sd.eigenforms_plus[0], sd.eigenforms_minus[0])
        fmax = frame_from_eigenforms(sd.eigenforms_plus[2], sd.eigenforms_minus[2])
        argmin = Plane(fmin[:, 0], fmin[:, 1])
        argmax = Plane(fmax[:, 0], fmax[:, 1])
    return KperpExtremes(float(k1), float(k3), argmin, argmax)


def random_frames(rng, n):
    """``n`` orthonormal frames as an (n, 4, 4) array, frames[k, c] = column c.

    Gram-Schmidt of Gaussian vectors: the first two columns are a uniformly
    distributed plane.
    """
    raw = rng.standard_normal((n, 4, 4))
    out = np.empty_like(raw)
    for c in range(4):
        v = raw[:, c].copy()
        for d in range(c):
            v -= np.einsum("ni,ni->n", v, out[:, d])[:, None] * out[:, d]
        out[:, c] = v / np.linalg.norm(v, axis=1)[:, None]
    return out


def random_plane(rng) -> Plane:
    f = random_frames(rng, 1)[0]
    return Plane(f[0], f[1])


def kperp_extremes_search(
    op: CurvatureOperator,
    n_samples=DEFAULT_SAMPLES,
    n_refinements=DEFAULT_SWEEPS,
    seed=0,
    backend=None,
    tol=1e-15,
) -> KperpExtremes:
    """Brute-force min/max of K_perp: random planes, then local refinement.

    Refinement is a rotating-axes line search: the tangent space splits
    into a self-dual and an anti-self-dual pair of rotation directions, and
    each pair is searched along two orthogonal axes that turn toward the
    last successful step.  Every line search is exact on the quartic that
    K_perp restricts to.  Deterministic for a given ``seed``.
    """
    kern = kernels.backend if backend is None else backend
    rt = np.ascontiguousarray(op.biortho_matrix())
    frames = random_frames(np.random.default_rng(seed), n_samples)
    if kern is kernels.python_backend:
        rt_arg = rt.tolist()
        values = kern.scan(rt_arg, frames.tolist())
    else:
        rt_arg = rt
        values = kern.scan(rt_arg, frames)
    values = np.asarray(values)
    lo = int(np.argmin(values))
    hi = int(np.argmax(values))
    kmin, fmin = kern.refine(rt_arg, frames[lo].tolist(), -1.0, n_refinements, tol)
    kmax, fmax = kern.refine(rt_arg, frames[hi].tolist(), 1.0, n_refinements, tol)
    fmin = np.asarray(fmin)
    fmax = np.asarray(fmax)
    return KperpExtremes(float(kmin), float(kmax), Plane(fmin[0], fmin[1]), Plane(fmax[0], fmax[1]))


# --- hypothesis checks

def default_margin(s):
    return 1e-9 * max(1.0, abs(s))


@dataclass
class PointVerdicts:
    s: float
    lambda_plus: tuple
    lambda_minus: tuple
    kperp1: float
    kperp3: float
    margin: float
    kperp1_positive: bool
    kperp3_below_quarter_s: bool
    scalar_positive: bool
    r_sums_positive: bool
    plus_positive: bool
    minus_positive: bool
    min_r_sum: float
    gap_kperp3: float
    weyl_disjuncts: tuple
    smallest_plus: float
    smallest_minus: float

    def as_dict(self):
        return {
            "s": self.s,
            "lambda_plus": list(self.lambda_plus),
            "lambda_minus": list(self.lambda_minus),
            "kperp1": self.kperp1,
            "kperp3": self.kperp3,
            "margin": self.margin,
            "verdicts": {
                "kperp1_positive": self.kperp1_positive,
                "kperp3_below_quarter_s": self.kperp3_below_quarter_s,
                "scalar_positive": self.scalar_positive,
                "r_sums_positive": self.r_sums_positive,
                "plus_operator_positive": self.plus_positive,
                "minus_operator_positive": self.minus_positive,
            },
            "min_r_sum": self.min_r_sum,
            "quarter_s_minus_kperp3": self.gap_kperp3,
            "weyl_disjuncts": list(self.weyl_disjuncts),
            "smallest_eig_plus": self.smallest_plus,
            "smallest_eig_minus": self.smallest_minus,
        }


def point_verdicts(sd: SpectralData, ext: KperpExtremes, margin=None) -> PointVerdicts:
    s = float(sd.s)
    tau = default_margin(s) if margin is None else float(margin)
    lp = np.asarray(sd.lambda_plus, dtype=float)
    lm = np.asarray(sd.lambda_minus, dtype=float)
    r_sums = (s / 3.0 - 2.0 * lp)[:, None] + (s / 3.0 - 2.0 * lm)[None, :]
    pos_plus = positivity_check(s, np.diag(lp), tau)
    pos_minus = positivity_check(s, np.diag(lm), tau)
    gap = s / 4.0 - ext.kperp3
    return PointVerdicts(
        s=s,
        lambda_plus=tuple(float(x) for x in lp),
        lambda_minus=tuple(float(x) for x in lm),
        kperp1=float(ext.kperp1),
        kperp3=float(ext.kperp3),
        margin=tau,
        kperp1_positive=ext.kperp1 > tau,
        kperp3_below_quarter_s=gap > tau,
        scalar_positive=s > tau,
        r_sums_positive=float(r_sums.min()) > tau,
        plus_positive=pos_plus.positive,
        minus_positive=pos_minus.positive,
        min_r_sum=float(r_sums.min()),
        gap_kperp3=float(gap),
        weyl_disjuncts=(s / 3.0 - 2.0 * lp[2] > tau, s / 3.0 - 2.0 * lm[2] > tau),
        smallest_plus=pos_plus.smallest,
        smallest_minus=pos_minus.smallest,
    )


@dataclass
class HypothesisReport:
    points: list
    aggregate: dict
    dichotomy: str
    consistency_errors: list = field(default_factory=list)

    def as_dict(self):
        return {
            "points": [None if p is None else p.as_dict() for p in self.points],
            "aggregate": dict(self.aggregate),
            "dichotomy": self.dichotomy,
            "consistency_errors": list(self.consistency_errors),
        }


VERDICT_NAMES = (
    "kperp1_positive",
    "kperp3_below_quarter_s",
    "scalar_positive",
    "r_sums_positive",
    "plus_positive",
    "minus_positive",
)


def hypothesis_report(points, margin=None) -> HypothesisReport:
    """Per-point and aggregate verdicts for ``[(SpectralData, KperpExtremes), ...]``.

    A ``None`` entry marks a point whose analysis failed; it counts as a
    failure for every aggregate verdict.  Violations of the implications
    K_perp_min > 0 => K_perp_max < s/4 and => s > 0 are consistency errors.
    """
    if not points:
        raise EmptySample("hypothesis report needs at least one point")
    verdicts = []
    errors = []
    for idx, item in enumerate(points):
        if item is None:
            verdicts.append(None)
            continue
        v = point_verdicts(item[0], item[1], margin)
        verdicts.append(v)
        if v.kperp1_positive and not v.kperp3_below_quarter_s:
            errors.append({"point": idx, "violated": "kperp1>0 implies kperp3<s/4"})
        if v.kperp1_positive and not v.scalar_positive:
            errors.append({"point": idx, "violated": "kperp1>0 implies s>0"})
        if v.kperp3_below_quarter_s and not v.r_sums_positive:
            errors.append({"point": idx, "violated": "kperp3<s/4 implies r+_i + r-_j > 0"})
    aggregate = {
        name: all(v is not None and getattr(v, name) for v in verdicts) for name in VERDICT_NAMES
    }
    plus_all = aggregate["plus_positive"]
    minus_all = aggregate["minus_positive"]
    if plus_all and minus_all:
        dichotomy = "both"
    elif plus_all:
        dichotomy = "plus"
    elif minus_all:
        dichotomy = "minus"
    else:
        dichotomy = "neither"
    return HypothesisReport(verdicts, aggregate, dichotomy, errors)
