"""Per-point analysis shared by the fact checker and the CLI."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .biortho import kperp_extremes_closed, kperp_extremes_search, random_frames
from .curvspec import curvature_operator, spectra
from .geometry import CurvaturePoint, riemann
from .lambda2 import TwoFormPoint, sd_asd_split


@dataclass
class PointAnalysis:
    curvature: CurvaturePoint
    operator: object
    spectral: object
    closed: object
    search: object = None


def analyze(metric, p, search=False, n_samples=1000, n_refinements=50, seed=0) -> PointAnalysis:
    cp = riemann(metric, p)
    op = curvature_operator(cp)
    sd = spectra(op)
    closed = kperp_extremes_closed(sd)
    found = None
    if search:
        found = kperp_extremes_search(op, n_samples, n_refinements, seed=seed)
    return PointAnalysis(cp, op, sd, closed, found)


def sectional_samples(op, rng, n):
    """Sectional curvatures of ``n`` random planes."""
    frames = random_frames(rng, n)
    u, v = frames[:, 0], frames[:, 1]
    pairs = ((0, 1), (0, 2), (0, 3), (2, 3), (3, 1), (1, 2))
    w = np.stack([u[:, i] * v[:, j] - u[:, j] * v[:, i] for i, j in pairs], axis=1)
    return np.einsum("ni,ij,nj->n", w, op.matrix, w)


def point_quantities(metric, p, form=None, n_planes=200, seed=0):
    """Every quantity a model fact can refer to, evaluated at ``p``."""
    pa = analyze(metric, p)
    cp, op, sd = pa.curvature, pa.operator, pa.spectral
    s = cp.scalar
    ks = sectional_samples(op, np.random.default_rng(seed), n_planes)
    out = {
        "s": s,
        "einstein_residual": float(np.abs(cp.ricci - s / 4.0 * np.eye(4)).max()),
        "riemann_max": float(np.abs(cp.riemann).max()),
        "weyl_max": float(max(np.abs(op.w_plus).max(), np.abs(op.w_minus).max())),
        "lambda_plus": tuple(float(x) for x in sd.lambda_plus),
        "lambda_minus": tuple(float(x) for x in sd.lambda_minus),
        "kperp1": pa.closed.kperp1,
        "kperp3": pa.closed.kperp3,
        "kperp3_minus_quarter_s": pa.closed.kperp3 - s / 4.0,
        "sectional_range": (float(ks.min()), float(ks.max())),
    }
    if form is not None:
        framed = TwoFormPoint.from_matrix(
            np.einsum("ij,ia,jb->ab", form.values(p), cp.frame, cp.frame)
        )
        out["form_length"] = framed.norm()
        out["form_anti_self_dual"] = sd_asd_split(framed)[1].norm()
    return out


def fact_deviation(expected, tolerance, value):
    """Deviation of ``value`` beyond an interval, or from a number/tuple."""
    if isinstance(value, tuple) and len(value) == 2 and isinstance(expected, tuple) and len(expected) == 2:
        lo, hi = value
        return max(0.0, expected[0] - lo, hi - expected[1])
    if isinstance(expected, tuple):
        return float(max(abs(a - b) for a, b in zip(expected, value)))
    return abs(float(value) - float(expected))
