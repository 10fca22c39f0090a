"""Key-value metric files.

    # comment
    domain = box(-1..1, -1..1, -1..1, -1..1)     # or ball(r)
    orientation = +1
    g11 = 1 + x1^2
    g12 = x3                                     # g21 is mirrored
    ...
    w12 = 1                                      # optional 2-form

Metric keys are the upper triangle g<i><j> with i <= j; the four diagonal
entries are required and missing off-diagonals are 0.  Form keys are
w<i><j> with i < j.  Every error carries the key, the 1-based line and the
1-based column in that line.
"""

from __future__ import annotations

import re

from . import exprlang as ex
from .errors import ConfigError, ExprSyntaxError
from .geometry import DIM, Ball, Box, MetricField
from .hodgeops import TwoFormField

_KEY = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)\s*=")
_METRIC_KEY = re.compile(r"^g([1-4])([1-4])$")
_FORM_KEY = re.compile(r"^w([1-4])([1-4])$")
_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
_INTERVAL = re.compile(rf"^\s*({_NUM})\s*\.\.\s*({_NUM})\s*$")


def _parse_domain(text, line, col):
    body = text.strip()
    m = re.fullmatch(r"(box|ball)\s*\((.*)\)", body)
    if not m:
        raise ConfigError("domain must be box(lo..hi, ...) or ball(r)", "domain", line, col)
    kind, inner = m.groups()
    if kind == "ball":
        try:
            return Ball(float(inner))
        except ValueError as exc:
            raise ConfigError(f"bad ball radius: {exc}", "domain", line, col) from None
    parts = inner.split(",")
    if len(parts) != DIM:
        raise ConfigError("box needs four intervals", "domain", line, col)
    lo, hi = [], []
    for part in parts:
        iv = _INTERVAL.match(part)
        if not iv:
            raise ConfigError(f"bad interval {part.strip()!r}", "domain", line, col)
        lo.append(float(iv.group(1)))
        hi.append(float(iv.group(2)))
    try:
        return Box(lo, hi)
    except ValueError as exc:
        raise ConfigError(str(exc), "domain", line, col) from None


def parse_metric_config(text, source="<config>"):
    """Parse config text; returns ``(MetricField, TwoFormField or None)``."""
    seen = {}
    metric = {}
    form = {}
    domain = None
    orientation = 1
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        indent = len(line) - len(line.lstrip())
        m = _KEY.match(line.lstrip())
        if not m:
            raise ConfigError("expected 'key = value'", None, lineno, indent + 1)
        key = m.group(1)
        value = line.lstrip()[m.end():]
        col = indent + m.end() + 1  # column of the first value character
        if key in seen:
            raise ConfigError(f"duplicate key (first set on line {seen[key]})", key, lineno, indent + 1)
        seen[key] = lineno
        if key == "domain":
            domain = _parse_domain(value, lineno, col)
            continue
        if key == "orientation":
            try:
                orientation = int(value.strip())
            except ValueError:
                orientation = 0
            if orientation not in (1, -1):
                raise ConfigError("orientation must be +1 or -1", key, lineno, col)
            continue
        gm = _METRIC_KEY.match(key)
        fm = _FORM_KEY.match(key)
        if gm:
            i, j = int(gm.group(1)), int(gm.group(2))
            if i > j:
                raise ConfigError(f"give the upper triangle entry g{j}{i} instead", key, lineno, indent + 1)
        elif fm:
            i, j = int(fm.group(1)), int(fm.group(2))
            if i >= j:
                raise ConfigError("form keys need i < j", key, lineno, indent + 1)
        else:
            raise ConfigError("unknown key", key, lineno, indent + 1)
        try:
            e = ex.parse(value)
        except ExprSyntaxError as exc:
            raise ConfigError(exc.message, key, lineno, col + exc.position - 1) from None
        (metric if gm else form)[i - 1, j - 1] = e
    for k in range(DIM):
        if (k, k) not in metric:
            raise ConfigError("missing diagonal component", f"g{k + 1}{k + 1}", None, None)
    comps = [[metric.get((min(i, j), max(i, j)), ex.ZERO) for j in range(DIM)] for i in range(DIM)]
    field = MetricField(comps, domain, orientation, name=source)
    return field, (TwoFormField(form) if form else None)


def load_metric_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return parse_metric_config(text, str(path))
