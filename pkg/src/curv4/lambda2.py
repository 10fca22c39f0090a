"""Pointwise algebra of 2-forms in an oriented orthonormal frame.

A 2-form is stored by its six coefficients in the basis

    b = (e12, e13, e14, e34, e42, e23)

which is orthonormal for |e^i ^ e^j| = 1.  The Hodge star swaps the two
halves of that vector, so the self-dual forms are ``(b_i + b_{i+3})/sqrt 2``
and the anti-self-dual ones ``(b_i - b_{i+3})/sqrt 2``.
"""

from __future__ import annotations

import numpy as np

from .errors import NotAntiSelfDual, NotDecomposable, NotSelfDual, NotUnit, ZeroForm

BASIS_PAIRS = ((0, 1), (0, 2), (0, 3), (2, 3), (3, 1), (1, 2))
DECOMPOSABLE_TOL = 1e-8

_SQ2 = np.sqrt(2.0)
# columns: phi_1..phi_3, psi_1..psi_3 expressed in the b basis
SPLIT_BASIS = np.block([[np.eye(3), np.eye(3)], [np.eye(3), -np.eye(3)]]) / _SQ2


class TwoFormPoint:
    """A 2-form at a point.  Antisymmetry holds by storage."""

    __slots__ = ("vec",)

    def __init__(self, vec):
        vec = np.array(vec, dtype=float)
        if vec.shape != (6,):
            raise ValueError("a 2-form in dimension 4 has six components")
        self.vec = vec

    @classmethod
    def from_matrix(cls, m):
        m = np.asarray(m, dtype=float)
        return cls([m[i, j] for i, j in BASIS_PAIRS])

    @classmethod
    def basis(cls, i, j):
        """The form e^i ^ e^j for 1-based indices."""
        m = np.zeros((4, 4))
        m[i - 1, j - 1] = 1.0
        m[j - 1, i - 1] = -1.0
        return cls.from_matrix(m)

    @classmethod
    def wedge_vectors(cls, u, v):
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        return cls([u[i] * v[j] - u[j] * v[i] for i, j in BASIS_PAIRS])

    @property
    def matrix(self):
        m = np.zeros((4, 4))
        for c, (i, j) in zip(self.vec, BASIS_PAIRS):
            m[i, j] = c
            m[j, i] = -c
        return m

    def norm(self):
        return float(np.linalg.norm(self.vec))

    def __add__(self, other):
        return TwoFormPoint(self.vec + other.vec)

    def __sub__(self, other):
        return TwoFormPoint(self.vec - other.vec)

    def __mul__(self, c):
        return TwoFormPoint(self.vec * float(c))

    __rmul__ = __mul__

    def __truediv__(self, c):
        return TwoFormPoint(self.vec / float(c))

    def __neg__(self):
        return TwoFormPoint(-self.vec)

    def __repr__(self):
        return f"TwoFormPoint({np.array2string(self.vec, precision=6)})"


def inner(a: TwoFormPoint, b: TwoFormPoint) -> float:
    return float(a.vec @ b.vec)


def hodge_star(a: TwoFormPoint) -> TwoFormPoint:
    return TwoFormPoint(np.concatenate([a.vec[3:], a.vec[:3]]))


def wedge(a: TwoFormPoint, b: TwoFormPoint) -> float:
    """Coefficient of e1^e2^e3^e4 in a ^ b."""
    return inner(a, hodge_star(b))


def sd_asd_split(a: TwoFormPoint):
    s = hodge_star(a)
    return TwoFormPoint(0.5 * (a.vec + s.vec)), TwoFormPoint(0.5 * (a.vec - s.vec))


def self_dual_coords(a: TwoFormPoint):
    """Coordinates of the two halves in the (phi, psi) bases."""
    c = SPLIT_BASIS.T @ a.vec
    return c[:3], c[3:]


def from_self_dual_coords(plus=(0.0, 0.0, 0.0), minus=(0.0, 0.0, 0.0)) -> TwoFormPoint:
    return TwoFormPoint(SPLIT_BASIS @ np.concatenate([plus, minus]))


def decompose_simple(a: TwoFormPoint, tol=DECOMPOSABLE_TOL):
    """Factor a decomposable form as ``|a| f1 ^ f2``.

    ``f1`` is the unit vector of the plane with the largest component along
    the lowest-index axis that meets the plane, that component made positive;
    ``f2`` follows from the orientation of ``a``.
    """
    size = a.norm()
    if size == 0.0:
        raise ZeroForm("cannot factor the zero form")
    if abs(wedge(a, a)) > tol * size * size:
        raise NotDecomposable(f"a^a = {wedge(a, a):.3e} for |a|^2 = {size * size:.3e}")
    m = a.matrix / size
    proj = -m @ m  # orthogonal projector onto the plane
    proj = 0.5 * (proj + proj.T)
    # the four squared axis projections sum to 2, so some axis clears 1/2
    k = next(k for k in range(4) if proj[k, k] > 0.25)
    f1 = proj[:, k] / np.sqrt(proj[k, k])
    # f1 ^ f2 = m  implies  m f1 = -f2
    f2 = -m @ f1
    f2 = f2 - (f2 @ f1) * f1
    f2 /= np.linalg.norm(f2)
    return f1, f2


def frame_from_eigenforms(alpha_plus: TwoFormPoint, alpha_minus: TwoFormPoint, tol=1e-9):
    """Oriented orthonormal frame with alpha± = (f12 ± f34)/sqrt 2.

    Returns a 4x4 array whose columns are f1..f4.
    """
    for name, form, sign, err in (
        ("alpha_plus", alpha_plus, 1.0, NotSelfDual),
        ("alpha_minus", alpha_minus, -1.0, NotAntiSelfDual),
    ):
        if abs(form.norm() - 1.0) > tol:
            raise NotUnit(f"{name} has norm {form.norm():.12g}")
        if np.linalg.norm(hodge_star(form).vec - sign * form.vec) > tol:
            raise err(f"{name} has the wrong duality")
    f1, f2 = decompose_simple(alpha_plus + alpha_minus)
    f3, f4 = decompose_simple((alpha_plus - alpha_minus) / _SQ2)
    frame = np.column_stack([f1, f2, f3, f4])
    if np.linalg.det(frame) < 0:  # pragma: no cover - excluded by the duality checks
        raise NotDecomposable("inconsistent eigenform pair")
    return frame
