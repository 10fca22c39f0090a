"""``curv4 analyze``: sample a metric, run the selected checks, write a report.

Exit codes: 0 all selected checks passed, 1 usage or config error, 2 some
verdict is false or a point failed, 3 internal inconsistency (an implication
between verdicts is violated, closed form and search disagree, a model fact
or the Weitzenboeck identity does not hold numerically).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import kernels
from .akstruct import build_acs, framed_form
from .analysis import analyze
from .biortho import hypothesis_report
from .config import load_metric_config
from .errors import ConfigError, Curv4Error, ExprSyntaxError
from .hodgeops import weitzenboeck_residual
from .models import MODEL_NAMES, builtin, perturbation_threshold, verify_facts

SCHEMA = 1
CHECKS = ("spectra", "kperp", "hypotheses", "ak", "weitzenboeck", "perturb")
DEFAULT_CHECKS = "spectra,kperp,hypotheses"
ORACLE_TOL = 1e-5
WEITZENBOECK_TOL = 1e-6
AK_TOL = 1e-9
SPECTRA_TOL = 1e-8
_REPORT_NAMES = {"plus_positive": "plus_operator_positive", "minus_positive": "minus_operator_positive"}
GATING = ("kperp1_positive", "kperp3_below_quarter_s", "scalar_positive", "r_sums_positive")

EXIT_OK, EXIT_USAGE, EXIT_VERDICT, EXIT_INCONSISTENT = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser():
    parser = _Parser(prog="curv4", description="Curvature analysis of 4-dimensional metrics on a chart.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    a = sub.add_parser("analyze", help="analyse a metric over a point sample")
    src = a.add_mutually_exclusive_group(required=True)
    src.add_argument("--builtin", choices=MODEL_NAMES, help="built-in model")
    src.add_argument("--metric", metavar="PATH", help="metric config file")
    a.add_argument("--r", type=float, help="sphere4 radius")
    a.add_argument("--r1", type=float, help="s2xs2 first radius")
    a.add_argument("--r2", type=float, help="s2xs2 second radius")
    a.add_argument("--t", type=float, help="fs_perturbed parameter")
    a.add_argument("--orientation", type=int, choices=(1, -1), help="override orientation")
    samp = a.add_mutually_exclusive_group()
    samp.add_argument("--grid", type=int, metavar="N", help="N points per axis (default 3)")
    samp.add_argument("--random", type=int, metavar="COUNT", help="COUNT uniform random points")
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--checks", default=DEFAULT_CHECKS, help=f"comma list from {','.join(CHECKS)}")
    a.add_argument("--margin", type=float, help="strictness margin (default 1e-9 max(1,|s|))")
    a.add_argument("--samples", type=int, default=1000, help="random planes per search")
    a.add_argument("--sweeps", type=int, default=50, help="refinement sweeps per search")
    a.add_argument("--format", choices=("json", "csv"), default="json")
    a.add_argument("--output", metavar="PATH", help="report file (default stdout)")
    return parser


# --- model loading, shared with worker processes

_MODEL_PARAMS = {"sphere4": ("r",), "s2xs2": ("r1", "r2"), "fs_perturbed": ("t",)}


def model_source(args):
    """Picklable description of the metric source."""
    if args.metric:
        return {"kind": "config", "path": args.metric, "orientation": args.orientation}
    allowed = _MODEL_PARAMS.get(args.builtin, ())
    params = {}
    for key in ("r", "r1", "r2", "t"):
        value = getattr(args, key)
        if value is None:
            continue
        if key not in allowed:
            raise UsageError(f"--{key} does not apply to {args.builtin}")
        params[key] = value
    return {"kind": "builtin", "name": args.builtin, "params": params, "orientation": args.orientation}


def load_source(source):
    """Returns ``(metric, form, model or None)``."""
    if source["kind"] == "config":
        metric, form = load_metric_config(source["path"])
        if source["orientation"] is not None:
            metric = metric.with_orientation(source["orientation"])
        return metric, form, None
    model = builtin(source["name"], orientation=source["orientation"] or 1, **source["params"])
    return model.metric, model.form, model


_WORKER = {}


def _init_worker(source, options):
    metric, form, _ = load_source(source)
    _WORKER.update(metric=metric, form=form, options=options)


def _worker_point(item):
    index, p = item
    return analyze_point(_WORKER["metric"], _WORKER["form"], index, p, _WORKER["options"])


# --- per-point analysis

def _floats(xs):
    return [float(x) for x in xs]


def analyze_point(metric, form, index, p, options):
    """Record for one point; domain errors become ``status: error`` records."""
    checks = options["checks"]
    rec = {"index": index, "point": _floats(p)}
    try:
        pa = analyze(
            metric,
            p,
            search="kperp" in checks,
            n_samples=options["samples"],
            n_refinements=options["sweeps"],
            seed=options["seed"] + index,
        )
    except (Curv4Error, ArithmeticError, np.linalg.LinAlgError) as exc:
        rec.update(status="error", error_type=type(exc).__name__, message=str(exc))
        return rec, None
    sd, closed = pa.spectral, pa.closed
    rec.update(
        status="ok",
        s=float(sd.s),
        lambda_plus=_floats(sd.lambda_plus),
        lambda_minus=_floats(sd.lambda_minus),
        r_plus=_floats(sd.r_plus),
        r_minus=_floats(sd.r_minus),
        kperp1_closed=closed.kperp1,
        kperp3_closed=closed.kperp3,
    )
    if "spectra" in checks:
        rec["operator_symmetry_defect"] = float(pa.operator.symmetry_defect())
        rec["spectral_defects"] = {k: float(v) for k, v in sd.invariant_defects().items()}
    if pa.search is not None:
        rec["kperp1_search"] = pa.search.kperp1
        rec["kperp3_search"] = pa.search.kperp3
        rec["oracle_gap"] = max(abs(pa.search.kperp1 - closed.kperp1), abs(pa.search.kperp3 - closed.kperp3))
    if form is not None and "ak" in checks:
        rec["ak"] = _ak_record(metric, form, pa.curvature)
    if form is not None and "weitzenboeck" in checks:
        try:
            wr = weitzenboeck_residual(form, metric, p)
            rec["weitzenboeck"] = {
                "duality": wr.duality,
                "residual": wr.residual,
                "d_norm": wr.d_norm,
                "delta_norm": wr.delta_norm,
                "laplacian_norm": wr.laplacian_norm,
                "nabla_norm": wr.nabla_norm,
            }
        except (Curv4Error, ArithmeticError) as exc:
            rec["weitzenboeck"] = {"error_type": type(exc).__name__, "message": str(exc)}
    return rec, (sd, closed)


def _ak_record(metric, form, cp):
    w = form.values(cp.point)
    framed = framed_form(w, cp.metric, metric.orientation)
    out = {"form_length": framed.norm()}
    try:
        acs = build_acs(cp.metric, w, orientation=metric.orientation)
    except Curv4Error as exc:
        out.update(error_type=type(exc).__name__, message=str(exc))
        return out
    defects = acs.defects()
    out["defects"] = defects
    out["max_defect"] = max(v for k, v in defects.items() if k != "positivity")
    return out


# --- report assembly

def sample_points(metric, args):
    if args.random is not None:
        if args.random < 1:
            raise UsageError("--random needs a positive count")
        return metric.domain.random(args.random, np.random.default_rng(args.seed))
    n = 3 if args.grid is None else args.grid
    if n < 1:
        raise UsageError("--grid needs a positive size")
    return metric.domain.grid(n)


def _run_points(source, metric, form, points, options):
    items = list(enumerate(points))
    workers = int(os.environ.get("CURV4_WORKERS", "1") or 1)
    if workers > 1 and len(items) > 1:
        with ProcessPoolExecutor(workers, initializer=_init_worker, initargs=(source, options)) as pool:
            return list(pool.map(_worker_point, items, chunksize=max(1, len(items) // (4 * workers))))
    return [analyze_point(metric, form, i, p, options) for i, p in items]


def run(args):
    """Build the report dict and the exit code for parsed ``args``."""
    checks = [c.strip() for c in args.checks.split(",") if c.strip()]
    unknown = [c for c in checks if c not in CHECKS]
    if unknown or not checks:
        raise UsageError(f"unknown checks {unknown}; choose from {','.join(CHECKS)}")
    if args.samples < 1 or args.sweeps < 0:
        raise UsageError("--samples must be positive and --sweeps non-negative")
    source = model_source(args)
    metric, form, model = load_source(source)
    if ("ak" in checks or "weitzenboeck" in checks) and form is None:
        raise UsageError("checks ak/weitzenboeck need a distinguished 2-form")
    if "perturb" in checks and (model is None or model.name not in ("fubini_study", "fs_perturbed")):
        raise UsageError("the perturb check applies to fubini_study and fs_perturbed")
    points = sample_points(metric, args)
    grid = None if args.random is not None else (3 if args.grid is None else args.grid)
    if len(points) == 0:
        raise UsageError("the sample is empty")
    options = {"checks": checks, "samples": args.samples, "sweeps": args.sweeps, "seed": args.seed}
    results = _run_points(source, metric, form, points, options)
    records = [r for r, _ in results]

    failed = False
    inconsistent = False
    aggregate = {"points": len(records), "errored_points": sum(r["status"] == "error" for r in records)}
    failed |= aggregate["errored_points"] > 0
    ok = [r for r in records if r["status"] == "ok"]

    if "spectra" in checks:
        worst = 0.0
        for r in ok:
            scale = max(1.0, abs(r["s"]))
            worst = max(worst, r["operator_symmetry_defect"] / scale, max(r["spectral_defects"].values()) / scale)
        aggregate["spectra"] = {"worst_defect": worst, "tolerance": SPECTRA_TOL, "passed": worst <= SPECTRA_TOL}
        inconsistent |= worst > SPECTRA_TOL

    if "kperp" in checks:
        gaps = [r["oracle_gap"] for r in ok]
        stats = {
            "max_gap": max(gaps, default=0.0),
            "mean_gap": float(np.mean(gaps)) if gaps else 0.0,
            "tolerance": ORACLE_TOL,
        }
        stats["passed"] = stats["max_gap"] <= ORACLE_TOL
        aggregate["oracle"] = stats
        inconsistent |= not stats["passed"]

    if "hypotheses" in checks:
        margin = args.margin
        hr = hypothesis_report([item for _, item in results], margin)
        for rec, v in zip(records, hr.points):
            if v is not None:
                d = v.as_dict()
                rec["verdicts"] = d["verdicts"]
                rec["margin"] = d["margin"]
                rec["min_r_sum"] = d["min_r_sum"]
                rec["quarter_s_minus_kperp3"] = d["quarter_s_minus_kperp3"]
        aggregate["hypotheses"] = {
            "verdicts": {_REPORT_NAMES.get(k, k): v for k, v in hr.aggregate.items()},
            "dichotomy": hr.dichotomy,
            "consistency_errors": hr.consistency_errors,
            "gating": list(GATING),
            "margin": "default: 1e-9*max(1,|s|)" if margin is None else margin,
        }
        failed |= not all(hr.aggregate[k] for k in GATING) or hr.dichotomy == "neither"
        inconsistent |= bool(hr.consistency_errors)

    if "ak" in checks:
        worst = max([r["ak"].get("max_defect", math.inf) for r in ok] + [0.0])
        lengths = [r["ak"]["form_length"] for r in ok]
        passed = worst <= AK_TOL and all(r["ak"]["defects"]["positivity"] > 0 for r in ok)
        aggregate["ak"] = {
            "worst_defect": worst if math.isfinite(worst) else None,
            "form_length_range": [min(lengths, default=0.0), max(lengths, default=0.0)],
            "tolerance": AK_TOL,
            "passed": passed,
        }
        failed |= not passed

    if "weitzenboeck" in checks:
        res = [r["weitzenboeck"] for r in ok]
        errored = sum("error_type" in w for w in res)
        worst = max([w["residual"] for w in res if "residual" in w] + [0.0])
        aggregate["weitzenboeck"] = {
            "worst_residual": worst,
            "tolerance": WEITZENBOECK_TOL,
            "errored_points": errored,
            "passed": worst <= WEITZENBOECK_TOL and not errored,
        }
        failed |= errored > 0
        inconsistent |= worst > WEITZENBOECK_TOL

    if model is not None and model.facts:
        good = [points[r["index"]] for r in ok]
        facts = verify_facts(model, good, seed=args.seed) if good else []
        aggregate["facts"] = facts
        inconsistent |= any(f["passed"] is False for f in facts)

    if "perturb" in checks:
        h = getattr(model, "perturbation", None)
        pr = perturbation_threshold(h, seed=args.seed)
        d = pr.as_dict()
        d["passed"] = pr.t0 > 0 and pr.min_at_half >= pr.threshold
        aggregate["perturb"] = d
        failed |= not d["passed"]

    if inconsistent:
        code = EXIT_INCONSISTENT
    elif failed:
        code = EXIT_VERDICT
    else:
        code = EXIT_OK
    report = {
        "schema": SCHEMA,
        "source": source,
        "domain": metric.domain.describe(),
        "orientation": metric.orientation,
        "sampling": {"grid": grid, "random": args.random, "seed": args.seed, "count": len(records)},
        "checks": checks,
        "search": {"samples": args.samples, "sweeps": args.sweeps, "backend": kernels.BACKEND_NAME},
        "points": records,
        "aggregate": aggregate,
        "exit_code": code,
    }
    return report, code


CSV_COLUMNS = (
    "index", "x1", "x2", "x3", "x4", "status", "s",
    "lambda_plus_1", "lambda_plus_2", "lambda_plus_3",
    "lambda_minus_1", "lambda_minus_2", "lambda_minus_3",
    "kperp1_closed", "kperp3_closed", "kperp1_search", "kperp3_search",
    "kperp1_positive", "kperp3_below_quarter_s", "scalar_positive", "r_sums_positive",
    "plus_operator_positive", "minus_operator_positive", "message",
)


def to_csv(report):
    buf = io.StringIO()
    writer = csv.DictWriter(buf, CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for r in report["points"]:
        row = {"index": r["index"], "status": r["status"], "message": r.get("message", "")}
        for k, x in enumerate(r["point"]):
            row[f"x{k + 1}"] = repr(x)
        if r["status"] == "ok":
            row["s"] = repr(r["s"])
            for side in ("plus", "minus"):
                for k, x in enumerate(r[f"lambda_{side}"]):
                    row[f"lambda_{side}_{k + 1}"] = repr(x)
            for key in ("kperp1_closed", "kperp3_closed", "kperp1_search", "kperp3_search"):
                if key in r:
                    row[key] = repr(r[key])
            for key, v in r.get("verdicts", {}).items():
                row[key] = str(v).lower()
        writer.writerow(row)
    return buf.getvalue()


def render(report, fmt):
    if fmt == "csv":
        return to_csv(report)
    return json.dumps(report, sort_keys=True, indent=2, allow_nan=False) + "\n"


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        report, code = run(args)
    except (UsageError, ConfigError, ExprSyntaxError) as exc:
        print(f"curv4: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Curv4Error as exc:
        print(f"curv4: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    text = render(report, args.format)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
