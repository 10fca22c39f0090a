"""Curvature operator on 2-forms, its Weyl blocks and their spectra.

The operator is normalized so that <R(u^v), u^v> = K(u, v) for orthonormal
u, v; with that choice the unit sphere has R = Id and trace(R) = s/2.  In the
(phi, psi) basis of :mod:`curv4.lambda2` it reads

    [[A, B], [B^T, C]],   A = s/12 + W+,   C = s/12 + W-,

with B the traceless-Ricci coupling.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import CurvaturePoint
from .lambda2 import BASIS_PAIRS, SPLIT_BASIS, TwoFormPoint, from_self_dual_coords

MODES = ("general", "einstein", "selfdual-weyl-only")


class CurvatureOperator:
    """Symmetric 6x6 matrix acting on 2-forms in the ``lambda2`` basis."""

    def __init__(self, matrix):
        m = np.asarray(matrix, dtype=float)
        if m.shape != (6, 6):
            raise ValueError("curvature operator must be 6x6")
        self.matrix = m
        split = SPLIT_BASIS.T @ m @ SPLIT_BASIS
        self.A = split[:3, :3]
        self.B = split[:3, 3:]
        self.C = split[3:, 3:]
        self.scalar = 2.0 * float(np.trace(m))

    @classmethod
    def from_blocks(cls, A, B, C):
        block = np.block([[A, B], [np.asarray(B).T, C]])
        return cls(SPLIT_BASIS @ block @ SPLIT_BASIS.T)

    @property
    def w_plus(self):
        return self.A - self.scalar / 12.0 * np.eye(3)

    @property
    def w_minus(self):
        return self.C - self.scalar / 12.0 * np.eye(3)

    def apply(self, form: TwoFormPoint) -> TwoFormPoint:
        return TwoFormPoint(self.matrix @ form.vec)

    def quadratic(self, form: TwoFormPoint) -> float:
        return float(form.vec @ self.matrix @ form.vec)

    def weyl_matrix(self):
        """W = W+ (+) W- as a 6x6 matrix in the b basis."""
        zero = np.zeros((3, 3))
        block = np.block([[self.w_plus, zero], [zero, self.w_minus]])
        return SPLIT_BASIS @ block @ SPLIT_BASIS.T

    def biortho_matrix(self):
        """Matrix ``M`` with K_perp(P) = w.M.w for the unit area form w of P."""
        swap = np.block([[np.zeros((3, 3)), np.eye(3)], [np.eye(3), np.zeros((3, 3))]])
        return 0.5 * (self.matrix + swap @ self.matrix @ swap)

    def symmetry_defect(self):
        return float(np.abs(self.matrix - self.matrix.T).max())

    def scaled(self, c):
        return CurvatureOperator(c * self.matrix)


def curvature_operator(cp: CurvaturePoint) -> CurvatureOperator:
    r = cp.riemann
    m = np.empty((6, 6))
    for a, (i, j) in enumerate(BASIS_PAIRS):
        for b, (k, l) in enumerate(BASIS_PAIRS):
            # K(e_i, e_j) = R_ijji sits on the diagonal
            m[a, b] = r[i, j, l, k]
    return CurvatureOperator(0.5 * (m + m.T))


@dataclass
class SpectralData:
    """Sorted Weyl spectra with r_i = s/3 - 2 lambda_i and unit eigenforms."""

    s: float
    lambda_plus: np.ndarray
    lambda_minus: np.ndarray
    eigenforms_plus: list = field(default_factory=list)
    eigenforms_minus: list = field(default_factory=list)

    @property
    def r_plus(self):
        return self.s / 3.0 - 2.0 * self.lambda_plus

    @property
    def r_minus(self):
        return self.s / 3.0 - 2.0 * self.lambda_minus

    def invariant_defects(self):
        """Violations of trace-freeness, sign and ratio bounds (all >= 0)."""
        out = {}
        for side, lam in (("plus", self.lambda_plus), ("minus", self.lambda_minus)):
            l1, _, l3 = lam
            out[f"trace_{side}"] = abs(float(np.sum(lam)))
            out[f"order_{side}"] = max(0.0, float(np.max(lam[:-1] - lam[1:])))
            out[f"sign_{side}"] = max(0.0, l1, -l3)
            out[f"ratio_{side}"] = max(0.0, -0.5 * l1 - l3, l3 + 2.0 * l1)
        return out


def _sorted_eig(w):
    vals, vecs = np.linalg.eigh(0.5 * (w + w.T))
    for k in range(3):
        v = vecs[:, k]
        if v[np.argmax(np.abs(v))] < 0:
            vecs[:, k] = -v
    return vals, vecs


def spectra(op: CurvatureOperator) -> SpectralData:
    lp, vp = _sorted_eig(op.w_plus)
    lm, vm = _sorted_eig(op.w_minus)
    return SpectralData(
        s=op.scalar,
        lambda_plus=lp,
        lambda_minus=lm,
        eigenforms_plus=[from_self_dual_coords(plus=vp[:, k]) for k in range(3)],
        eigenforms_minus=[from_self_dual_coords(minus=vm[:, k]) for k in range(3)],
    )


@dataclass(frozen=True)
class PositivityVerdict:
    positive: bool
    smallest: float


def positivity_check(s, w, margin=0.0) -> PositivityVerdict:
    """Is (s/3) Id - 2W positive beyond ``margin``?"""
    m = s / 3.0 * np.eye(3) - 2.0 * np.asarray(w, dtype=float)
    smallest = float(np.linalg.eigvalsh(0.5 * (m + m.T))[0])
    return PositivityVerdict(smallest > margin, smallest)


def _traceless_sym(rng, scale):
    x = rng.normal(scale=scale, size=(3, 3))
    w = 0.5 * (x + x.T)
    return w - np.trace(w) / 3.0 * np.eye(3)


def random_curvature(seed, mode="general", scale=1.0) -> CurvatureOperator:
    """Random algebraic curvature operator with the requested block structure.

    Any symmetric [[A, B], [B^T, C]] with trace A = trace C satisfies the
    first Bianchi identity in dimension 4, so the blocks are drawn freely.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
    rng = np.random.default_rng(seed)
    s = rng.uniform(-6.0, 18.0) * scale
    w_plus = _traceless_sym(rng, scale)
    w_minus = _traceless_sym(rng, scale)
    b = rng.normal(scale=scale, size=(3, 3))
    if mode != "general":
        b = np.zeros((3, 3))
    if mode == "selfdual-weyl-only":
        w_minus = np.zeros((3, 3))
    eye = np.eye(3)
    return CurvatureOperator.from_blocks(s / 12.0 * eye + w_plus, b, s / 12.0 * eye + w_minus)


def random_spectra(seed, n, scale=3.0, s_range=(-10.0, 30.0)):
    """Vectorized batch of trace-free, ascending Weyl spectra and scalars.

    Returns ``(s, lambda_plus, lambda_minus)`` with shapes (n,), (n,3), (n,3).
    """
    rng = np.random.default_rng(seed)
    s = rng.uniform(*s_range, size=n)
    out = []
    for _ in range(2):
        lam = rng.normal(scale=scale, size=(n, 3))
        lam -= lam.mean(axis=1, keepdims=True)
        lam.sort(axis=1)
        out.append(lam)
    return s, out[0], out[1]
