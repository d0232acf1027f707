"""Figure rendering from harness result CSVs.

Input schema: the fixed harness columns
``beta,n,m,k,t,event,trials,successes,p_hat,ci_low,ci_high,seed``.
Rendering is deterministic given the CSV bytes and the spec: the plotted
series are a pure function of the rows, figures carry no timestamps, and
``render`` returns the series it drew so tests can compare values instead of
raster bytes.

Figure kinds
------------
sweep-curves   two-time crossing probability vs t, one curve per n
               (rows with an event of the form ``pair[cross:n=..]``)
scaled-sweep   the same with t divided by eps_n = 1/(n^2 alpha_n) taken from
               an arm-table CSV (rows ``arm4:m=1,n=..`` with empty t)
arm-loglog     log-log alpha_n vs n with the fitted slope annotated
qm-ratios      quasi-multiplicativity ratios pi_km pi_mn / pi_kn vs t; the
               CSV carries consecutive row triples (k,m), (m,n), (k,n)
green-tail     green-cluster tail probabilities vs lambda (rows with event
               ``green-tail`` and the lambda value in the k column), with the
               e^-lambda reference line
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "dynising-plots"  # deterministic SVG ids
import matplotlib.pyplot as plt
import numpy as np

KINDS = ("sweep-curves", "scaled-sweep", "arm-loglog", "qm-ratios", "green-tail")
COLUMNS = ["beta", "n", "m", "k", "t", "event", "trials", "successes",
           "p_hat", "ci_low", "ci_high", "seed"]
FORMATS = (".png", ".svg")


class DataError(ValueError):
    """Malformed or empty input data (exit code 1)."""


class SpecError(ValueError):
    """Invalid figure specification (exit code 2)."""


@dataclass
class FigureSpec:
    kind: str
    inputs: list
    out: Path
    logx: bool = False
    logy: bool = False
    title: Optional[str] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SpecError(f"unknown figure kind {self.kind!r}; expected one of {KINDS}")
        if not self.inputs:
            raise SpecError("at least one input CSV is required")
        self.out = Path(self.out)
        if self.out.suffix.lower() not in FORMATS:
            raise SpecError(f"output format must be png or svg, got {self.out.suffix!r}")


def read_rows(path) -> list[dict]:
    path = Path(path)
    if not path.exists():
        raise DataError(f"input CSV not found: {path}")
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in COLUMNS if c not in header]
        if missing:
            raise DataError(f"{path}: missing columns {missing} (header {header})")
        rows = list(reader)
    if not rows:
        raise DataError(f"{path}: no data rows")
    return rows


def _num(row, col):
    raw = row.get(col, "")
    if raw is None or raw == "":
        return None
    try:
        return float(raw)
    except ValueError as exc:
        raise DataError(f"column {col!r} has non-numeric value {raw!r}") from exc


def _sweep_rows(rows):
    out = []
    for row in rows:
        if row["event"].startswith("pair[cross") and row["t"] != "" and row["n"] != "":
            out.append((int(_num(row, "n")), _num(row, "t"), _num(row, "p_hat"),
                        _num(row, "ci_low"), _num(row, "ci_high")))
    if not out:
        raise DataError("no two-time crossing rows (event 'pair[cross:...]' with t and n)")
    return out


def _arm_rows(rows):
    out = []
    for row in rows:
        if row["event"].startswith("arm4:m=1") and row["t"] == "":
            out.append((int(_num(row, "n")), _num(row, "p_hat"),
                        _num(row, "ci_low"), _num(row, "ci_high")))
    if not out:
        raise DataError("no four-arm table rows (static event 'arm4:m=1,...')")
    return sorted(out)


def _new_axes(spec):
    fig, ax = plt.subplots(figsize=(6.4, 4.4), dpi=120)
    if spec.title:
        ax.set_title(spec.title)
    return fig, ax


def _finish(fig, ax, spec):
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    meta = {"Date": None} if spec.out.suffix.lower() == ".svg" else None
    fig.savefig(spec.out, metadata=meta)
    plt.close(fig)


def render(spec: FigureSpec) -> dict:
    """Render the figure, write it to spec.out, and return the plotted series
    keyed by curve label: {label: {"x": [...], "y": [...], ...}}."""
    if spec.kind == "sweep-curves":
        return _render_sweep(spec, scaled=False)
    if spec.kind == "scaled-sweep":
        return _render_sweep(spec, scaled=True)
    if spec.kind == "arm-loglog":
        return _render_arm_loglog(spec)
    if spec.kind == "qm-ratios":
        return _render_qm(spec)
    if spec.kind == "green-tail":
        return _render_green_tail(spec)
    raise SpecError(f"unknown figure kind {spec.kind!r}")


def _render_sweep(spec, scaled: bool) -> dict:
    rows = read_rows(spec.inputs[0])
    cells = _sweep_rows(rows)
    eps = None
    if scaled:
        if len(spec.inputs) < 2:
            raise SpecError("scaled-sweep needs a second input: the arm-table CSV")
        arms = _arm_rows(read_rows(spec.inputs[1]))
        eps = {n: 1.0 / (n * n * p) for n, p, _, _ in arms if p > 0}
    fig, ax = _new_axes(spec)
    series = {}
    for n in sorted({c[0] for c in cells}):
        pts = sorted(c for c in cells if c[0] == n)
        if scaled:
            if n not in eps:
                raise DataError(f"arm table has no usable alpha for n={n}")
            xs = [t / eps[n] for _, t, _, _, _ in pts]
        else:
            xs = [t for _, t, _, _, _ in pts]
        ys = [p for _, _, p, _, _ in pts]
        lo = [p - l for _, _, p, l, _ in pts]
        hi = [h - p for _, _, p, _, h in pts]
        label = f"n={n}"
        ax.errorbar(xs, ys, yerr=[lo, hi], marker="o", capsize=2, label=label)
        series[label] = {"x": xs, "y": ys}
    ax.set_xlabel("t / eps_n" if scaled else "t")
    ax.set_ylabel("P(sigma, sigma_t in Cross_n)")
    ax.axhline(0.25, color="gray", lw=0.8, ls="--")
    ax.axhline(0.5, color="gray", lw=0.8, ls=":")
    if spec.logx:
        ax.set_xscale("log")
    ax.legend()
    _finish(fig, ax, spec)
    return series


def fit_loglog_slope(ns, alphas) -> float:
    """Least-squares slope of log alpha against log n."""
    xs = np.log(np.asarray(ns, dtype=float))
    ys = np.log(np.asarray(alphas, dtype=float))
    return float(np.polyfit(xs, ys, 1)[0])


def _render_arm_loglog(spec) -> dict:
    arms = _arm_rows(read_rows(spec.inputs[0]))
    arms = [a for a in arms if a[1] > 0]
    if len(arms) < 2:
        raise DataError("need at least two positive alpha_n values for a slope")
    ns = [a[0] for a in arms]
    ys = [a[1] for a in arms]
    slope = fit_loglog_slope(ns, ys)
    fig, ax = _new_axes(spec)
    lo = [p - l for _, p, l, _ in arms]
    hi = [h - p for _, p, _, h in arms]
    ax.errorbar(ns, ys, yerr=[lo, hi], marker="s", capsize=2, label="alpha_n")
    xs = np.array([min(ns), max(ns)], dtype=float)
    c = ys[0] / ns[0] ** slope
    ax.plot(xs, c * xs ** slope, "--", label=f"slope {slope:.3f}")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("n")
    ax.set_ylabel("alpha_n")
    ax.annotate(f"slope = {slope:.3f}", xy=(0.05, 0.08), xycoords="axes fraction")
    ax.legend()
    _finish(fig, ax, spec)
    return {"alpha": {"x": ns, "y": ys}, "slope": slope}


def _render_qm(spec) -> dict:
    rows = read_rows(spec.inputs[0])
    pair_rows = [r for r in rows if r["event"].startswith("pair[arm4")]
    if len(pair_rows) < 3 or len(pair_rows) % 3 != 0:
        raise DataError("qm-ratios expects consecutive row triples (k,m), (m,n), (k,n)")
    fig, ax = _new_axes(spec)
    xs = []
    ys = []
    labels = []
    for i in range(0, len(pair_rows), 3):
        km, mn, kn = pair_rows[i : i + 3]
        p1, p2, p3 = (_num(r, "p_hat") for r in (km, mn, kn))
        if not p3:
            raise DataError("pi_kn estimate is zero; ratio undefined")
        t = _num(km, "t") or 0.0
        k = int(_num(km, "m"))
        m = int(_num(km, "n"))
        n = int(_num(kn, "n"))
        xs.append(t)
        ys.append(p1 * p2 / p3)
        labels.append(f"({k},{m},{n})")
    for x, y, lab in zip(xs, ys, labels):
        ax.scatter([x], [y], label=f"{lab}")
        ax.annotate(lab, (x, y), textcoords="offset points", xytext=(4, 4), fontsize=8)
    ax.axhline(1.0, color="gray", lw=0.8, ls="--")
    ax.set_xlabel("t")
    ax.set_ylabel("pi_km pi_mn / pi_kn")
    _finish(fig, ax, spec)
    return {"ratios": {"x": xs, "y": ys, "labels": labels}}


def _render_green_tail(spec) -> dict:
    rows = read_rows(spec.inputs[0])
    tail = [(int(_num(r, "k")), _num(r, "p_hat"), _num(r, "ci_low"), _num(r, "ci_high"))
            for r in rows if r["event"] == "green-tail"]
    if not tail:
        raise DataError("no green-tail rows (event 'green-tail' with lambda in the k column)")
    tail.sort()
    lams = [t[0] for t in tail]
    ys = [t[1] for t in tail]
    fig, ax = _new_axes(spec)
    lo = [p - l for _, p, l, _ in tail]
    hi = [h - p for _, p, _, h in tail]
    ax.errorbar(lams, ys, yerr=[lo, hi], marker="o", capsize=2, label="P(|G_x| >= lambda)")
    ax.plot(lams, [math.exp(-l) for l in lams], "--", label="e^-lambda")
    ax.set_yscale("log" if all(y > 0 for y in ys) else "linear")
    ax.set_xlabel("lambda")
    ax.set_ylabel("tail probability")
    ax.legend()
    _finish(fig, ax, spec)
    return {"tail": {"x": lams, "y": ys}}
