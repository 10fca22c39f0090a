"""Built-in model geometries with chart expressions and checkable facts."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import exprlang as ex
from .errors import BadParams, UnknownModel
from .geometry import DIM, Box, MetricField
from .hodgeops import TwoFormField

T_MAX = 0.5
MODEL_NAMES = ("flat4", "sphere4", "fubini_study", "s2xs2", "fs_perturbed")


@dataclass(frozen=True)
class Fact:
    """An analytic claim about a model, checked by :func:`verify_facts`.

    ``quantity`` names an entry of :func:`curv4.analysis.point_quantities`;
    ``expected`` is a number or a (lo, hi) interval.  ``verified=False``
    records a fact that is known but not desk-checkable (e.g. volume).
    """

    quantity: str
    expected: object
    tolerance: float
    provenance: str
    verified: bool = True


@dataclass
class ModelGeometry:
    name: str
    metric: MetricField
    form: TwoFormField | None = None
    facts: list = field(default_factory=list)
    params: dict = field(default_factory=dict)


def _r2(xs):
    total = ex.ZERO
    for x in xs:
        total = total + x ** 2
    return total


def _diag(entries):
    z = ex.ZERO
    return [[entries[i] if i == j else z for j in range(DIM)] for i in range(DIM)]


def flat4():
    metric = MetricField(_diag([ex.ONE] * DIM), Box([0.0] * DIM, [1.0] * DIM), name="flat4")
    form = TwoFormField.from_dict({(1, 2): 1, (3, 4): 1})
    facts = [
        Fact("s", 0.0, 1e-12, "trivial"),
        Fact("riemann_max", 0.0, 1e-12, "trivial"),
        Fact("lambda_plus", (0.0, 0.0, 0.0), 1e-12, "trivial"),
        Fact("lambda_minus", (0.0, 0.0, 0.0), 1e-12, "trivial"),
        Fact("kperp1", 0.0, 1e-12, "trivial"),
        Fact("kperp3", 0.0, 1e-12, "trivial"),
        Fact("form_length", math.sqrt(2.0), 1e-12, "trivial"),
    ]
    return ModelGeometry("flat4", metric, form, facts)


def _conformal_factor(radius, xs):
    r = float(radius)
    return ex.const(4.0 * r ** 4) / (ex.const(r * r) + _r2(xs)) ** 2


def sphere4(r=1.0):
    if r <= 0:
        raise BadParams("sphere radius must be positive")
    f = _conformal_factor(r, ex.X)
    metric = MetricField(_diag([f] * DIM), Box([-1.0] * DIM, [1.0] * DIM), name="sphere4")
    k = 1.0 / (r * r)
    facts = [
        Fact("s", 12.0 * k, 1e-9, "space form: s = n(n-1)k"),
        Fact("einstein_residual", 0.0, 1e-9, "space form"),
        Fact("weyl_max", 0.0, 1e-9, "conformally flat"),
        Fact("sectional_range", (k, k), 1e-9, "space form"),
        Fact("kperp1", k, 1e-8, "space form"),
        Fact("kperp3", k, 1e-8, "space form"),
    ]
    return ModelGeometry("sphere4", metric, None, facts, {"r": r})


def fubini_study_components():
    """Real chart components of the Fubini-Study metric and Kahler form.

    Affine chart z1 = x1 + i x2, z2 = x3 + i x4 with hermitian metric
    h = (rho I - conj(z) z^T) / rho^2, rho = 1 + |z|^2 (holomorphic sectional
    curvature 4).  g = Re h and omega(X, Y) = g(JX, Y) for J = multiplication
    by i.
    """
    x1, x2, x3, x4 = ex.X
    p = (x1, x3)
    q = (x2, x4)
    rho = ex.ONE + _r2(ex.X)
    rho2 = rho ** 2
    re = [[None, None], [None, None]]
    im = [[None, None], [None, None]]
    for a in range(2):
        for b in range(2):
            delta = rho if a == b else ex.ZERO
            re[a][b] = (delta - (p[a] * p[b] + q[a] * q[b])) / rho2
            im[a][b] = -(p[a] * q[b] - q[a] * p[b]) / rho2
    # real coordinate index of Re z_a is 2a, of Im z_a is 2a+1
    g = [[None] * DIM for _ in range(DIM)]
    w = [[None] * DIM for _ in range(DIM)]
    for a in range(2):
        for b in range(2):
            g[2 * a][2 * b] = re[a][b]
            g[2 * a + 1][2 * b + 1] = re[a][b]
            g[2 * a][2 * b + 1] = im[a][b]
            g[2 * a + 1][2 * b] = -im[a][b]
            w[2 * a][2 * b] = -im[a][b]
            w[2 * a + 1][2 * b + 1] = -im[a][b]
            w[2 * a][2 * b + 1] = re[a][b]
            w[2 * a + 1][2 * b] = -re[a][b]
    # symmetrize interning: g[i][j] and g[j][i] must be the same node
    for i in range(DIM):
        for j in range(i):
            g[i][j] = g[j][i]
    return g, w


def fubini_study():
    g, w = fubini_study_components()
    metric = MetricField(g, Box([-1.0] * DIM, [1.0] * DIM), name="fubini_study")
    form = TwoFormField({(i, j): w[i][j] for i in range(DIM) for j in range(i + 1, DIM)})
    facts = [
        Fact("s", 24.0, 1e-6, "computed: holomorphic sectional curvature 4"),
        Fact("einstein_residual", 0.0, 1e-8, "computed: Einstein with Ric = 6g"),
        Fact("sectional_range", (1.0, 4.0), 1e-6, "classical: sectional curvature in [1, 4]"),
        Fact("lambda_plus", (-2.0, -2.0, 4.0), 1e-6, "computed: Kahler W+ spectrum s/6 (-1/2, -1/2, 1)"),
        Fact("lambda_minus", (0.0, 0.0, 0.0), 1e-8, "computed: self-dual Weyl only"),
        Fact("kperp1", 1.0, 1e-5, "computed: closed form + search"),
        Fact("kperp3", 4.0, 1e-5, "computed: closed form + search"),
        Fact("form_length", math.sqrt(2.0), 1e-8, "computed: Kahler form"),
        Fact("volume", math.pi ** 2 / 2.0, 0.0, "classical: total volume pi^2/2", verified=False),
    ]
    return ModelGeometry("fubini_study", metric, form, facts)


def s2xs2(r1=1.0, r2=1.0):
    if r1 <= 0 or r2 <= 0:
        raise BadParams("sphere radii must be positive")
    f1 = _conformal_factor(r1, ex.X[:2])
    f2 = _conformal_factor(r2, ex.X[2:])
    metric = MetricField(_diag([f1, f1, f2, f2]), Box([-1.0] * DIM, [1.0] * DIM), name="s2xs2")
    form = TwoFormField.from_dict({(1, 2): f1, (3, 4): f2})
    s = 2.0 / r1 ** 2 + 2.0 / r2 ** 2
    facts = [Fact("s", s, 1e-9, "product of round spheres")]
    if r1 == r2:
        k = 1.0 / r1 ** 2
        facts += [
            Fact("kperp1", 0.0, 1e-8, "computed: mixed planes are flat"),
            Fact("kperp3", k, 1e-8, "computed: factor planes"),
            Fact("kperp3_minus_quarter_s", 0.0, 1e-9, "computed: boundary case"),
            Fact("form_length", math.sqrt(2.0), 1e-9, "sum of unit area forms"),
        ]
    return ModelGeometry("s2xs2", metric, form, facts, {"r1": r1, "r2": r2})


def reference_bump(center=(0.0, 0.0, 0.0, 0.0), width=0.5):
    """Symmetric perturbation concentrated near ``center``.

    A Gaussian envelope exp(-|x - c|^2 / width^2) times a fixed symmetric
    pattern; the grammar has no piecewise functions, so the cut-off is
    Gaussian decay rather than exact compact support.
    """
    shifted = [ex.X[k] - ex.const(center[k]) for k in range(DIM)]
    bump = ex.exp(-_r2(shifted) / ex.const(width * width))
    pattern = np.array(
        [
            [1.0, 0.3, 0.0, 0.2],
            [0.3, -0.5, 0.4, 0.0],
            [0.0, 0.4, 0.8, -0.3],
            [0.2, 0.0, -0.3, -0.6],
        ]
    )
    return [[bump * ex.const(pattern[i, j]) for j in range(DIM)] for i in range(DIM)]


def fs_perturbed(h=None, t=0.0):
    t = float(t)
    if abs(t) >= T_MAX:
        raise BadParams(f"|t| must be below {T_MAX}")
    h = reference_bump() if h is None else [[ex.as_expr(h[i][j]) for j in range(DIM)] for i in range(DIM)]
    for i in range(DIM):
        for j in range(i):
            if h[i][j] is not h[j][i]:
                raise BadParams("perturbation must be symmetric")
    g, w = fubini_study_components()
    tt = ex.const(t)
    comps = [[g[i][j] + tt * h[i][j] for j in range(DIM)] for i in range(DIM)]
    metric = MetricField(comps, Box([-0.5] * DIM, [0.5] * DIM), name="fs_perturbed")
    form = TwoFormField({(i, j): w[i][j] for i in range(DIM) for j in range(i + 1, DIM)})
    model = ModelGeometry("fs_perturbed", metric, form, [], {"t": t})
    model.perturbation = h
    return model


_BUILDERS: dict[str, Callable] = {
    "flat4": flat4,
    "sphere4": sphere4,
    "fubini_study": fubini_study,
    "s2xs2": s2xs2,
    "fs_perturbed": fs_perturbed,
}


def builtin(name, orientation=1, **params) -> ModelGeometry:
    """Look up a model by name; ``params`` are passed to its builder."""
    try:
        build = _BUILDERS[name]
    except KeyError:
        raise UnknownModel(f"unknown model {name!r}; known: {', '.join(MODEL_NAMES)}") from None
    try:
        model = build(**params)
    except TypeError as exc:
        raise BadParams(str(exc)) from None
    if orientation == -1:
        model.metric = model.metric.with_orientation(-1)
        swapped = []
        for f in model.facts:
            if f.quantity == "lambda_plus":
                f = Fact("lambda_minus", f.expected, f.tolerance, f.provenance, f.verified)
            elif f.quantity == "lambda_minus":
                f = Fact("lambda_plus", f.expected, f.tolerance, f.provenance, f.verified)
            swapped.append(f)
        model.facts = swapped
    return model


def verify_facts(model: ModelGeometry, sample, n_planes=200, seed=0):
    """Evaluate every fact of ``model`` at each sample point.

    Returns one record per fact with the worst deviation seen; facts marked
    ``verified=False`` are listed but not evaluated.
    """
    from .analysis import fact_deviation, point_quantities

    worst = {f.quantity: 0.0 for f in model.facts}
    for k, p in enumerate(sample):
        q = point_quantities(model.metric, p, model.form, n_planes=n_planes, seed=seed + k)
        for f in model.facts:
            if f.verified:
                worst[f.quantity] = max(worst[f.quantity], fact_deviation(f.expected, f.tolerance, q[f.quantity]))
    records = []
    for f in model.facts:
        expected = list(f.expected) if isinstance(f.expected, tuple) else f.expected
        records.append(
            {
                "quantity": f.quantity,
                "expected": expected,
                "tolerance": f.tolerance,
                "provenance": f.provenance,
                "verified": f.verified,
                "worst_deviation": worst[f.quantity] if f.verified else None,
                "passed": (worst[f.quantity] <= f.tolerance) if f.verified else None,
            }
        )
    return records


@dataclass
class PerturbationResult:
    t0: float
    baseline_min: float
    min_at_half: float
    threshold: float
    scan: list
    seed: int

    def as_dict(self):
        return {
            "t0": self.t0,
            "baseline_min": self.baseline_min,
            "min_at_half_t0": self.min_at_half,
            "threshold": self.threshold,
            "scan": [list(x) for x in self.scan],
            "seed": self.seed,
        }


class _PerturbationProbe:
    """min K_perp over fixed (point, plane) pairs for g = g_FS + t h."""

    def __init__(self, h, points, frames):
        from .geometry import MetricField

        g, _ = fubini_study_components()
        self.base = MetricField(g)
        self.bump = MetricField(h)
        self.points = points
        self.frames = frames
        self._jets = [(self.base.jet(p), self.bump.jet(p)) for p in points]

    def min_kperp(self, t):
        from .curvspec import curvature_operator
        from .errors import NotPositiveDefinite
        from .geometry import curvature_from_jet

        pairs = ((0, 1), (0, 2), (0, 3), (2, 3), (3, 1), (1, 2))
        best = math.inf
        for k, ((g0, d0, dd0), (h0, dh, ddh)) in enumerate(self._jets):
            try:
                cp = curvature_from_jet(g0 + t * h0, d0 + t * dh, dd0 + t * ddh)
            except NotPositiveDefinite:
                return -math.inf
            m = curvature_operator(cp).biortho_matrix()
            fr = self.frames[k]
            u, v = fr[:, 0], fr[:, 1]
            w = np.stack([u[:, i] * v[:, j] - u[:, j] * v[:, i] for i, j in pairs], axis=1)
            best = min(best, float(np.einsum("ni,ij,nj->n", w, m, w).min()))
        return best


def perturbation_threshold(h=None, seed=0, n_points=50, n_planes=10, t_step=0.01, bisections=12):
    """Largest |t| keeping min K_perp >= half its unperturbed value.

    ``n_points * n_planes`` (point, plane) pairs are drawn once from
    ``seed`` inside the bump's box and reused for every t.  The scan walks
    t = +-t_step, +-2 t_step, ... until the criterion fails on either side,
    then bisects between the last pass and the first failure.
    """
    from .biortho import random_frames

    h = reference_bump() if h is None else [[ex.as_expr(h[i][j]) for j in range(DIM)] for i in range(DIM)]
    rng = np.random.default_rng(seed)
    points = Box([-0.5] * DIM, [0.5] * DIM).random(n_points, rng)
    frames = [random_frames(rng, n_planes) for _ in range(n_points)]
    probe = _PerturbationProbe(h, points, frames)
    baseline = probe.min_kperp(0.0)
    threshold = 0.5 * baseline
    scan = [(0.0, baseline)]

    def ok(t):
        value = min(probe.min_kperp(t), probe.min_kperp(-t))
        scan.append((t, value))
        return value >= threshold

    lo, hi = 0.0, None
    t = t_step
    while t < T_MAX:
        if not ok(t):
            hi = t
            break
        lo = t
        t = round(t + t_step, 12)
    if hi is not None:
        for _ in range(bisections):
            mid = 0.5 * (lo + hi)
            if ok(mid):
                lo = mid
            else:
                hi = mid
    t0 = lo
    half = min(probe.min_kperp(0.5 * t0), probe.min_kperp(-0.5 * t0))
    return PerturbationResult(t0, baseline, half, threshold, scan, seed)
