"""Pure-Python plane-search kernels (fallback for ``_ckernels``).

A plane is carried as an orthonormal 4-frame ``F`` (list of four 4-lists,
``F[c]`` is column ``c``); the plane is span(F[0], F[1]) and F[2], F[3] span
its complement.  ``rt`` is the 6x6 symmetric matrix with
K_perp(P) = w . rt . w for w the unit area form of P.

The Cython module mirrors every function here operation for operation.
"""

import math

_PAIRS = ((0, 1), (0, 2), (0, 3), (2, 3), (3, 1), (1, 2))


def _generator(images):
    """4x4 matrix D (D[j][k] = e_j component of D e_k) from the images of e_k."""
    D = [[0.0] * 4 for _ in range(4)]
    for k, (j, c) in enumerate(images):
        D[j][k] = c
    return D


# Rotation generators with D^2 = -1, in frame coordinates.  Each pair spans
# the tangent directions of one half (self-dual or anti-self-dual) of the
# unit area form; moving along it turns that half and fixes the other.
_FAMILIES = (
    (_generator(((2, 1.0), (3, -1.0), (0, -1.0), (1, 1.0))), _generator(((3, 1.0), (2, 1.0), (1, -1.0), (0, -1.0)))),
    (_generator(((2, 1.0), (3, 1.0), (0, -1.0), (1, -1.0))), _generator(((3, 1.0), (2, -1.0), (1, 1.0), (0, -1.0)))),
)
_GOLDEN = 0.6180339887498949
_NSCAN = 8


def _wedge(u, v):
    return [u[i] * v[j] - u[j] * v[i] for i, j in _PAIRS]


def _bilinear(rt, a, b):
    total = 0.0
    for i in range(6):
        row = rt[i]
        acc = 0.0
        for j in range(6):
            acc += row[j] * b[j]
        total += a[i] * acc
    return total


def _quartic(q, theta):
    c = math.cos(theta)
    s = math.sin(theta)
    return (((q[0] * c + q[1] * s) * c + q[2] * s * s) * c + q[3] * s ** 3) * c + q[4] * s ** 4


def _line_search(q, sign):
    """Best rotation angle for sign*f over one period, by scan + golden section."""
    step = math.pi / _NSCAN
    best_t = 0.0
    best_f = sign * q[0]
    for k in range(_NSCAN):
        t = -0.5 * math.pi + k * step
        f = sign * _quartic(q, t)
        if f > best_f:
            best_f = f
            best_t = t
    lo = best_t - step
    hi = best_t + step
    x1 = hi - _GOLDEN * (hi - lo)
    x2 = lo + _GOLDEN * (hi - lo)
    f1 = sign * _quartic(q, x1)
    f2 = sign * _quartic(q, x2)
    while hi - lo > 1e-10:
        if f1 < f2:
            lo = x1
            x1 = x2
            f1 = f2
            x2 = lo + _GOLDEN * (hi - lo)
            f2 = sign * _quartic(q, x2)
        else:
            hi = x2
            x2 = x1
            f2 = f1
            x1 = hi - _GOLDEN * (hi - lo)
            f1 = sign * _quartic(q, x1)
    t = 0.5 * (lo + hi)
    f = sign * _quartic(q, t)
    if f > best_f:
        return t, f
    return best_t, best_f


def _orthonormalize(F):
    for c in range(4):
        v = F[c]
        for d in range(c):
            w = F[d]
            dot = sum(v[i] * w[i] for i in range(4))
            v = [v[i] - dot * w[i] for i in range(4)]
        norm = math.sqrt(sum(x * x for x in v))
        F[c] = [x / norm for x in v]


def biortho_value(rt, u, v):
    w = _wedge(u, v)
    return _bilinear(rt, w, w)


def scan(rt, frames):
    """K_perp of each plane span(F[0], F[1]); ``frames`` is a sequence of frames."""
    return [biortho_value(rt, F[0], F[1]) for F in frames]


def _apply(D, F, k):
    """Frame vector D e_k = sum_j D[j][k] F[j]."""
    return [sum(D[j][k] * F[j][i] for j in range(4)) for i in range(4)]


def _axis(family, phi):
    g1, g2 = _FAMILIES[family]
    c = math.cos(phi)
    s = math.sin(phi)
    return [[c * g1[j][k] + s * g2[j][k] for k in range(4)] for j in range(4)]


def _move_coefficients(rt, F, D):
    """K_perp along exp(tD) as a quartic form in (cos t, sin t)."""
    du = _apply(D, F, 0)
    dv = _apply(D, F, 1)
    w0 = _wedge(F[0], F[1])
    w1 = [x + y for x, y in zip(_wedge(F[0], dv), _wedge(du, F[1]))]
    w2 = _wedge(du, dv)
    r00 = _bilinear(rt, w0, w0)
    r01 = _bilinear(rt, w0, w1)
    r02 = _bilinear(rt, w0, w2)
    r11 = _bilinear(rt, w1, w1)
    r12 = _bilinear(rt, w1, w2)
    r22 = _bilinear(rt, w2, w2)
    return (r00, 2.0 * r01, r11 + 2.0 * r02, 2.0 * r12, r22)


def refine(rt, frame, sign, sweeps, tol):
    """Local ascent of sign*K_perp by line searches along plane rotations.

    Each sweep searches two orthogonal directions for each half of the area
    form, then turns that half's first direction toward the step just taken
    (rotating coordinates), which keeps narrow valleys from stalling the
    search.  Angles come from a scan plus golden-section search.  Returns
    ``(value, frame)``.
    """
    F = [list(map(float, col)) for col in frame]
    phi = [0.0, 0.0]
    current = sign * biortho_value(rt, F[0], F[1])
    for _ in range(sweeps):
        start = current
        for family in range(2):
            steps = [0.0, 0.0]
            for k in range(2):
                D = _axis(family, phi[family] + 0.5 * math.pi * k)
                q = _move_coefficients(rt, F, D)
                t, f = _line_search(q, sign)
                if f > sign * q[0]:
                    c = math.cos(t)
                    s = math.sin(t)
                    DF = [_apply(D, F, j) for j in range(4)]
                    F = [[c * F[j][i] + s * DF[j][i] for i in range(4)] for j in range(4)]
                    steps[k] = t
            if steps[0] != 0.0 or steps[1] != 0.0:
                phi[family] += math.atan2(steps[1], steps[0])
        _orthonormalize(F)
        current = sign * biortho_value(rt, F[0], F[1])
        if current - start <= tol * max(1.0, abs(current)):
            break
    return sign * current, F
