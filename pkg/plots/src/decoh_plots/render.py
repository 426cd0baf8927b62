"""Render decoh CSV outputs into figures.

Each plot kind expects its input CSV schema exactly; a mismatch is reported
with the first offending header name and no image is written. When a
summary.txt sits next to the input CSV, its key=value parameters drive the
analytic overlays (classical trajectory, canonical density). Inputs are never
modified; figures are regenerable artifacts, and the numeric side-outputs
(fitted slopes) are returned for testing.
"""
from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass

import numpy as np

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

SCHEMAS = {
    "trajectory_overlay": ["time", "q_mean", "p_mean", "energy", "q_var", "p_var", "r_q", "r_p"],
    "residuals": ["time", "q_mean", "p_mean", "energy", "q_var", "p_var", "r_q", "r_p"],
    "loglog_slope": ["tau", "abs_bracket_minus_one", "rule"],
    "histogram_vs_density": ["step", "q0", "p0", "energy"],
}
PLOT_KINDS = tuple(SCHEMAS)


class SchemaError(ValueError):
    """Input header does not match the plot kind's schema."""

    def __init__(self, offending, expected):
        self.offending = offending
        super().__init__(f"unexpected header column {offending!r} (schema: {','.join(expected)})")


class EmptyInputError(ValueError):
    """Header-only CSV: nothing to draw."""


@dataclass
class PlotJob:
    input_csv: str
    plot_kind: str
    output_image: str

    def __post_init__(self):
        if self.plot_kind not in SCHEMAS:
            raise ValueError(f"unknown plot kind {self.plot_kind!r}")


def read_rows(path, expected_header):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError("<missing header>", expected_header)
        for got, want in zip(header, expected_header):
            if got != want:
                raise SchemaError(got, expected_header)
        if len(header) != len(expected_header):
            missing = expected_header[len(header):]
            offending = header[len(expected_header):]
            raise SchemaError(offending[0] if offending else f"<missing {missing[0]}>", expected_header)
        rows = [row for row in reader if row]
    if not rows:
        raise EmptyInputError(f"{path} has a header but no data rows")
    return rows


def read_summary(csv_path):
    """key=value pairs from summary.txt next to the CSV, if present."""
    path = os.path.join(os.path.dirname(os.path.abspath(csv_path)), "summary.txt")
    if not os.path.exists(path):
        return {}
    values = {}
    with open(path) as fh:
        for line in fh:
            key, sep, value = line.rstrip("\n").partition("=")
            if sep:
                values[key] = value
    return values


def _floats(rows, col):
    return np.array([float(r[col]) if r[col] != "" else np.nan for r in rows])


def _potential_energy(summary, q):
    kind = summary.get("potential")
    if kind == "harmonic":
        return 0.5 * float(summary["potential_k"]) * q * q
    if kind == "quartic":
        return float(summary["potential_a"]) * q**4
    if kind == "double_well":
        return float(summary["potential_a"]) * q**4 - float(summary["potential_b"]) * q * q
    if kind == "cosine":
        return float(summary["potential_amplitude"]) * np.cos(float(summary["potential_wavenumber"]) * q)
    return None


def _render_trajectory_overlay(rows, summary, ax):
    t = _floats(rows, 0)
    q = _floats(rows, 1)
    p = _floats(rows, 2)
    ax.plot(t, q, label="<q>(t)", color="C0")
    ax.plot(t, p, label="<p>(t)", color="C1", alpha=0.7)
    overlay = False
    if summary.get("potential") == "harmonic":
        k = float(summary["potential_k"])
        m = float(summary.get("mass", "1"))
        w = math.sqrt(k / m)
        q_cl = q[0] * np.cos(w * t) + p[0] / (m * w) * np.sin(w * t)
        ax.plot(t, q_cl, "k--", lw=1, label="classical q(t)")
        overlay = True
    ax.set_xlabel("time")
    ax.set_ylabel("expectation value")
    ax.legend(loc="best", fontsize=8)
    ax.set_title("expectation trajectory" + (" vs classical" if overlay else ""))
    return {"classical_overlay": overlay}


def _render_residuals(rows, summary, ax):
    t = _floats(rows, 0)
    r_q = np.abs(_floats(rows, 6))
    r_p = np.abs(_floats(rows, 7))
    good = ~np.isnan(r_q)
    if not np.any(good):
        raise EmptyInputError("no interior records with residuals")
    floor = 1e-18
    ax.semilogy(t[good], np.maximum(r_q[good], floor), label="|r_q|", color="C0")
    ax.semilogy(t[good], np.maximum(r_p[good], floor), label="|r_p|", color="C1")
    ax.set_xlabel("time")
    ax.set_ylabel("residual")
    ax.legend(loc="best", fontsize=8)
    ax.set_title("expectation equation-of-motion residuals")
    return {"max_r_q": float(np.nanmax(r_q)), "max_r_p": float(np.nanmax(r_p))}


def fit_loglog_slope(tau, err):
    usable = err > 1e-15
    if np.count_nonzero(usable) < 2:
        raise EmptyInputError("fewer than 2 errors above 1e-15; cannot fit a slope")
    return float(np.polyfit(np.log(tau[usable]), np.log(err[usable]), 1)[0])


def _render_loglog(rows, summary, ax):
    rules = sorted({r[2] for r in rows})
    slopes = {}
    for i, rule in enumerate(rules):
        sel = [r for r in rows if r[2] == rule]
        tau = np.array([float(r[0]) for r in sel])
        err = np.array([float(r[1]) for r in sel])
        slope = fit_loglog_slope(tau, err)
        slopes[rule] = slope
        ax.loglog(tau, err, "o-", color=f"C{i}", label=f"{rule}: slope {slope:.3f}")
    ax.set_xlabel("tau")
    ax.set_ylabel("|bracket - 1|")
    ax.legend(loc="best", fontsize=8)
    ax.set_title("propagator-product defect convergence")
    return {"slopes": slopes}


def _render_histogram(rows, summary, ax):
    q = _floats(rows, 1)
    counts, edges = np.histogram(q, bins=48)
    widths = np.diff(edges)
    density = counts / (counts.sum() * widths)
    ax.bar(edges[:-1], density, width=widths, align="edge", alpha=0.6, label="sampled q")
    overlay = False
    if summary.get("potential") and summary.get("potential") != "free":
        kBT = float(summary.get("kB", "1")) * float(summary.get("temperature", "1"))
        grid = np.linspace(edges[0], edges[-1], 512)
        u = _potential_energy(summary, grid)
        if u is not None:
            w = np.exp(-u / kBT)
            z = np.trapezoid(w, grid)
            ax.plot(grid, w / z, "k-", lw=1.5, label="canonical density")
            overlay = True
    ax.set_xlabel("q")
    ax.set_ylabel("density")
    ax.legend(loc="best", fontsize=8)
    ax.set_title("position histogram" + (" vs canonical density" if overlay else ""))
    return {"density_overlay": overlay}


RENDERERS = {
    "trajectory_overlay": _render_trajectory_overlay,
    "residuals": _render_residuals,
    "loglog_slope": _render_loglog,
    "histogram_vs_density": _render_histogram,
}


def render(job: PlotJob) -> dict:
    """Draw one figure; returns the numeric side-outputs of the plot kind."""
    rows = read_rows(job.input_csv, SCHEMAS[job.plot_kind])
    summary = read_summary(job.input_csv)
    fig, ax = plt.subplots(figsize=(6.4, 4.2), dpi=120)
    try:
        meta = RENDERERS[job.plot_kind](rows, summary, ax)
        fig.tight_layout()
        fig.savefig(job.output_image)
    finally:
        plt.close(fig)
    return meta
