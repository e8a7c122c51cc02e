"""Render figures from erwlab CSV outputs. No re-simulation: CSV in, image out."""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

FIG1_PATH_COLUMNS = ["step", "position", "C", "B", "M", "I"]
FIG1_D_COLUMNS = ["y", "D", "local_time", "led_residual"]
FIG1_E_COLUMNS = ["y", "E", "local_time", "led_residual"]
FIG3_COLUMNS = ["step", "C", "approx"]
SAMPLE_COLUMNS = ["replica", "value"]
TAIL_COLUMNS = ["replica", "sigma0", "sum", "censored"]

_STYLE = {"dpi": 120, "path_color": "#2c3e50", "d_color": "#1f77b4",
          "e_color": "#ff7f0e", "approx_color": "#d62728"}


class SchemaError(ValueError):
    """Raised when a CSV does not match the documented column schema."""


def read_csv(path, expected: list[str]) -> dict[str, np.ndarray]:
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    header = lines[0].split(",")
    if header != expected:
        raise SchemaError(f"{path}: expected columns {expected}, found {header}")
    cols = {h: [] for h in header}
    for ln in lines[1:]:
        for h, v in zip(header, ln.split(",")):
            cols[h].append(float(v) if v != "" else math.nan)
    return {h: np.asarray(v) for h, v in cols.items()}


def render_fig1(path_csv, d_csv, e_csv, out) -> Path:
    """Walk path on the left, directed-edge profiles on the right."""
    pathd = read_csv(path_csv, FIG1_PATH_COLUMNS)
    dprof = read_csv(d_csv, FIG1_D_COLUMNS)
    eprof = read_csv(e_csv, FIG1_E_COLUMNS)
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(11, 4.2))
    ax1.plot(pathd["step"], pathd["position"], lw=0.4, color=_STYLE["path_color"])
    ax1.set_xlabel("step")
    ax1.set_ylabel("position")
    ax1.set_title("walk path to the stopping time")
    ax2.plot(dprof["y"], dprof["D"], lw=0.9, color=_STYLE["d_color"],
             label="left steps D(y)")
    ax2.plot(eprof["y"], eprof["E"], lw=0.9, color=_STYLE["e_color"],
             label="right steps E(y)")
    ax2.set_xlabel("site y")
    ax2.set_ylabel("directed edge local time")
    ax2.set_title("edge profiles about the center site")
    ax2.legend(frameon=False)
    return _save(fig, out)


def render_fig3(drift_csvs, out, titles=None) -> Path:
    """Accumulated drift against its extremum approximation, one panel per CSV."""
    drift_csvs = list(drift_csvs)
    k = len(drift_csvs)
    fig, axes = plt.subplots(1, k, figsize=(5.6 * k, 4.2), squeeze=False)
    for i, csv in enumerate(drift_csvs):
        data = read_csv(csv, FIG3_COLUMNS)
        ax = axes[0][i]
        ax.plot(data["step"], data["C"], lw=0.7, color=_STYLE["d_color"],
                label="accumulated drift C")
        ax.plot(data["step"], data["approx"], lw=0.7, color=_STYLE["approx_color"],
                label="extremum approximation")
        ax.set_xlabel("step")
        ax.set_ylabel("drift")
        title = titles[i] if titles else Path(csv).stem
        ax.set_title(title)
        ax.legend(frameon=False)
    return _save(fig, out)


def render_ks_overlay(a_csv, b_csv, out, labels=("sample A", "sample B")) -> Path:
    """Empirical CDF overlay of two sample CSVs."""
    a = read_csv(a_csv, SAMPLE_COLUMNS)["value"]
    b = read_csv(b_csv, SAMPLE_COLUMNS)["value"]
    fig, ax = plt.subplots(figsize=(6.2, 4.4))
    for vals, label, color in ((a, labels[0], _STYLE["d_color"]),
                               (b, labels[1], _STYLE["e_color"])):
        xs = np.sort(vals)
        ys = np.arange(1, len(xs) + 1) / len(xs)
        ax.step(xs, ys, where="post", lw=1.0, label=label, color=color)
    ax.set_xlabel("value")
    ax.set_ylabel("empirical CDF")
    ax.legend(frameon=False)
    return _save(fig, out)


def render_tail_loglog(tail_csv, out, tail_fraction: float = 0.3) -> Path:
    """Survival function of sigma_0 on log-log axes with a fitted slope."""
    data = read_csv(tail_csv, TAIL_COLUMNS)
    vals = data["sigma0"]
    cen = data["censored"] > 0
    total = len(vals)
    cmin = vals[cen].min() if cen.any() else math.inf
    unc = vals[~cen]
    thresh = np.quantile(unc, 1.0 - tail_fraction)
    grid, surv = [], []
    k = max(0, math.ceil(math.log2(max(thresh, 1.0))))
    while True:
        g = 2.0 ** k
        if g >= cmin or g >= unc.max():
            break
        exceed = np.count_nonzero(vals > g)
        if exceed < 10:
            break
        grid.append(g)
        surv.append(exceed / total)
        k += 1
    fig, ax = plt.subplots(figsize=(6.2, 4.4))
    ax.loglog(grid, surv, "o", ms=4, color=_STYLE["d_color"], label="survival")
    if len(grid) >= 2:
        lx, ly = np.log(grid), np.log(surv)
        slope, intercept = np.polyfit(lx, ly, 1)
        ax.loglog(grid, np.exp(intercept) * np.asarray(grid) ** slope, "-",
                  lw=1.0, color=_STYLE["approx_color"],
                  label=f"fit, exponent {-slope:.3f}")
    ax.set_xlabel("n")
    ax.set_ylabel("P(sigma0 > n)")
    ax.legend(frameon=False)
    return _save(fig, out)


def max_gap_over_sqrt(drift_csv) -> float:
    """max_k |C_k - approx_k| / sqrt(n) from a drift-comparison CSV."""
    data = read_csv(drift_csv, FIG3_COLUMNS)
    n = len(data["step"]) - 1
    return float(np.abs(data["C"] - data["approx"]).max() / math.sqrt(n))


def _save(fig, out) -> Path:
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, dpi=_STYLE["dpi"])
    plt.close(fig)
    return out
