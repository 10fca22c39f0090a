# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled plane-search kernels; same contract as ``_pykernels``."""

from libc.math cimport atan2, cos, sin, sqrt, fabs, M_PI

cdef int[6][2] PAIRS = [[0, 1], [0, 2], [0, 3], [2, 3], [3, 1], [1, 2]]
# FAMILIES[f][a][j][k]: e_j component of D e_k; see _pykernels._FAMILIES
cdef double[2][2][4][4] FAMILIES = [
    [[[0, 0, -1, 0], [0, 0, 0, 1], [1, 0, 0, 0], [0, -1, 0, 0]],
     [[0, 0, 0, -1], [0, 0, -1, 0], [0, 1, 0, 0], [1, 0, 0, 0]]],
    [[[0, 0, -1, 0], [0, 0, 0, -1], [1, 0, 0, 0], [0, 1, 0, 0]],
     [[0, 0, 0, -1], [0, 0, 1, 0], [0, -1, 0, 0], [1, 0, 0, 0]]],
]
cdef double GOLDEN = 0.6180339887498949
cdef int NSCAN = 8


cdef inline void _wedge(double* u, double* v, double* out) nogil:
    cdef int k, i, j
    for k in range(6):
        i = PAIRS[k][0]
        j = PAIRS[k][1]
        out[k] = u[i] * v[j] - u[j] * v[i]


cdef inline double _bilinear(double[:, ::1] rt, double* a, double* b) nogil:
    cdef double total = 0.0, acc
    cdef int i, j
    for i in range(6):
        acc = 0.0
        for j in range(6):
            acc = acc + rt[i, j] * b[j]
        total = total + a[i] * acc
    return total


cdef inline double _quartic(double* q, double theta) nogil:
    cdef double c = cos(theta), s = sin(theta)
    return (((q[0] * c + q[1] * s) * c + q[2] * s * s) * c + q[3] * s * s * s) * c + q[4] * s * s * s * s


cdef void _line_search(double* q, double sign, double* t_out, double* f_out) nogil:
    cdef double step = M_PI / NSCAN
    cdef double best_t = 0.0, best_f = sign * q[0]
    cdef double t, f, lo, hi, x1, x2, f1, f2
    cdef int k
    for k in range(NSCAN):
        t = -0.5 * M_PI + k * step
        f = sign * _quartic(q, t)
        if f > best_f:
            best_f = f
            best_t = t
    lo = best_t - step
    hi = best_t + step
    x1 = hi - GOLDEN * (hi - lo)
    x2 = lo + GOLDEN * (hi - lo)
    f1 = sign * _quartic(q, x1)
    f2 = sign * _quartic(q, x2)
    while hi - lo > 1e-10:
        if f1 < f2:
            lo = x1
            x1 = x2
            f1 = f2
            x2 = lo + GOLDEN * (hi - lo)
            f2 = sign * _quartic(q, x2)
        else:
            hi = x2
            x2 = x1
            f2 = f1
            x1 = hi - GOLDEN * (hi - lo)
            f1 = sign * _quartic(q, x1)
    t = 0.5 * (lo + hi)
    f = sign * _quartic(q, t)
    if f > best_f:
        t_out[0] = t
        f_out[0] = f
    else:
        t_out[0] = best_t
        f_out[0] = best_f


cdef void _orthonormalize(double[4][4] F) nogil:
    cdef int c, d, i
    cdef double dot, norm
    for c in range(4):
        for d in range(c):
            dot = 0.0
            for i in range(4):
                dot = dot + F[c][i] * F[d][i]
            for i in range(4):
                F[c][i] = F[c][i] - dot * F[d][i]
        norm = 0.0
        for i in range(4):
            norm = norm + F[c][i] * F[c][i]
        norm = sqrt(norm)
        for i in range(4):
            F[c][i] = F[c][i] / norm


cdef double _value(double[:, ::1] rt, double[4][4] F) nogil:
    cdef double w[6]
    _wedge(&F[0][0], &F[1][0], w)
    return _bilinear(rt, w, w)


def biortho_value(double[:, ::1] rt, u, v):
    cdef double uu[4]
    cdef double vv[4]
    cdef double w[6]
    cdef int i
    for i in range(4):
        uu[i] = u[i]
        vv[i] = v[i]
    _wedge(uu, vv, w)
    return _bilinear(rt, w, w)


def scan(double[:, ::1] rt, frames):
    cdef double[:, :, :] fr = frames
    cdef Py_ssize_t n = fr.shape[0], k
    cdef double uu[4]
    cdef double vv[4]
    cdef double w[6]
    cdef int i
    out = [0.0] * n
    for k in range(n):
        for i in range(4):
            uu[i] = fr[k, 0, i]
            vv[i] = fr[k, 1, i]
        _wedge(uu, vv, w)
        out[k] = _bilinear(rt, w, w)
    return out


cdef void _apply(double[4][4] D, double[4][4] F, int k, double* out) nogil:
    cdef int i, j
    for i in range(4):
        out[i] = 0.0
        for j in range(4):
            out[i] = out[i] + D[j][k] * F[j][i]


cdef void _axis(int family, double phi, double[4][4] D) nogil:
    cdef double c = cos(phi), s = sin(phi)
    cdef int j, k
    for j in range(4):
        for k in range(4):
            D[j][k] = c * FAMILIES[family][0][j][k] + s * FAMILIES[family][1][j][k]


cdef void _move_coefficients(double[:, ::1] rt, double[4][4] F, double[4][4] D, double* q) nogil:
    cdef double du[4]
    cdef double dv[4]
    cdef double w0[6]
    cdef double w1[6]
    cdef double w2[6]
    cdef double tmp[6]
    cdef int k
    _apply(D, F, 0, du)
    _apply(D, F, 1, dv)
    _wedge(&F[0][0], &F[1][0], w0)
    _wedge(&F[0][0], dv, w1)
    _wedge(du, &F[1][0], tmp)
    for k in range(6):
        w1[k] = w1[k] + tmp[k]
    _wedge(du, dv, w2)
    q[0] = _bilinear(rt, w0, w0)
    q[1] = 2.0 * _bilinear(rt, w0, w1)
    q[2] = _bilinear(rt, w1, w1) + 2.0 * _bilinear(rt, w0, w2)
    q[3] = 2.0 * _bilinear(rt, w1, w2)
    q[4] = _bilinear(rt, w2, w2)


def refine(double[:, ::1] rt, frame, double sign, int sweeps, double tol):
    cdef double F[4][4]
    cdef double DF[4][4]
    cdef double D[4][4]
    cdef double q[5]
    cdef double phi[2]
    cdef double steps[2]
    cdef double t, f, cs, sn, current, start
    cdef int a, i, j, k, family, sweep
    for a in range(4):
        for i in range(4):
            F[a][i] = frame[a][i]
    phi[0] = 0.0
    phi[1] = 0.0
    with nogil:
        current = sign * _value(rt, F)
        for sweep in range(sweeps):
            start = current
            for family in range(2):
                steps[0] = 0.0
                steps[1] = 0.0
                for k in range(2):
                    _axis(family, phi[family] + 0.5 * M_PI * k, D)
                    _move_coefficients(rt, F, D, q)
                    _line_search(q, sign, &t, &f)
                    if f > sign * q[0]:
                        cs = cos(t)
                        sn = sin(t)
                        for j in range(4):
                            _apply(D, F, j, &DF[j][0])
                        for j in range(4):
                            for i in range(4):
                                F[j][i] = cs * F[j][i] + sn * DF[j][i]
                        steps[k] = t
                if steps[0] != 0.0 or steps[1] != 0.0:
                    phi[family] = phi[family] + atan2(steps[1], steps[0])
            _orthonormalize(F)
            current = sign * _value(rt, F)
            if current - start <= tol * (fabs(current) if fabs(current) > 1.0 else 1.0):
                break
    return sign * current, [[F[a][i] for i in range(4)] for a in range(4)]
