"""Matplotlib figure rendering for the CLI report paths (Agg, file output)."""

from __future__ import annotations

import math

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from . import majorants as mj
from . import precessing as pr


def save(fig, path):
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return str(path)


def expansion_norms(kind_label, terms, path):
    """Bar chart of the l1 coefficient mass per degree."""
    degrees = list(range(1, len(terms)))
    weights = [float(sum(abs(c) for _, c in t.terms())) for t in terms[1:]]
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.bar(degrees, weights, color="#35618f")
    ax.set_xlabel("degree")
    ax.set_ylabel("l1 coefficient mass")
    ax.set_title(f"{kind_label} expansion terms")
    return save(fig, path)


def majorant_curve(spec, mass, nterms, path):
    r = mj.radius(spec)
    xs = np.linspace(0.0, 0.98 * r, 200)
    closed = [mj.closed_form(spec, x) for x in xs]
    partial = [mj.partial_sum(spec, x, nterms) for x in xs]
    fig, ax = plt.subplots(figsize=(5, 3.4))
    ax.plot(xs, closed, label="closed form", lw=2)
    ax.plot(xs, partial, "--", label=f"partial sum ({nterms} terms)")
    ax.axvline(r, color="k", ls=":", lw=1, label=f"radius {r:.4f}")
    if 0 <= mass < r:
        ax.axvline(mass, color="#a33", ls="-.", lw=1, label=f"mass {mass}")
    ax.set_xlabel("cumulative mass x")
    ax.set_ylabel("g(x)")
    ax.set_title(spec.name)
    ax.legend(fontsize=8)
    return save(fig, path)


def heat_series(diag, path):
    fig, axes = plt.subplots(1, 2, figsize=(8.6, 3.2))
    t = diag.series.get("t")
    if t is not None and len(t):
        axes[0].plot(t, diag.series["M_G"], lw=1.5)
        axes[0].set_xlabel("t")
        axes[0].set_ylabel("M_G(t)")
        axes[0].set_title("generated mass")
        axes[1].semilogy(t, np.maximum(diag.series["variation"], 1e-300), lw=1.5)
        axes[1].set_xlabel("t")
        axes[1].set_ylabel("spatial variation")
        axes[1].set_title("homogenization")
    fig.suptitle(f"status: {diag.status}", fontsize=9)
    return save(fig, path)


def field_profile(field, path, title="final field"):
    fig, ax = plt.subplots(figsize=(5.2, 3.4))
    d = field.dim
    for i in range(d):
        for j in range(d):
            col = field.values[:, i, j]
            if np.abs(col).max() > 1e-14:
                ax.plot(field.x, col, lw=1.2, label=f"A[{i},{j}]")
    ax.set_xlabel("x")
    ax.set_ylabel("matrix entries")
    ax.set_title(title)
    ax.legend(fontsize=7, ncols=2)
    return save(fig, path)


def phase_diagram(state, path, lim=3.0):
    """The (b, c) phase plane with the case regions and the state's trajectory."""
    fig, ax = plt.subplots(figsize=(5.4, 5.0))
    b = np.linspace(-lim, lim, 400)
    c = np.linspace(-lim, lim, 400)
    B, C = np.meshgrid(b, c)
    mx = np.maximum(-1.0 - B, C - 1.0)
    region = np.where(np.isclose(C, -B, atol=2 * lim / 400), 0,
                      np.where(mx < 0, 1, np.where(mx > 0, 3, 2)))
    ax.contourf(B, C, region, levels=[-0.5, 0.5, 1.5, 2.5, 3.5],
                colors=["#cccccc", "#cde6cd", "#f7e8b0", "#efc4c4"], alpha=0.8)
    ax.plot(b, -b, color="#555", lw=1, label="stationary b = -c")
    ax.axvline(-1.0, color="#996", lw=0.8, ls="--")
    ax.axhline(1.0, color="#996", lw=0.8, ls="--")
    # sample trajectories through a lattice of starts
    for b0 in np.linspace(-2.5, 2.5, 9):
        for c0 in np.linspace(-2.5, 2.5, 9):
            st = pr.PrecessState(0.0, b0, c0, state.k)
            if abs(b0 + c0) < 1e-9:
                continue
            tmax = pr.max_time(st)
            tend = min(0.9 * tmax if math.isfinite(tmax) else 2.5 / state.k, 2.5 / state.k)
            ts = np.linspace(0, tend, 60)[1:]
            try:
                pts = np.array([pr.trajectory(st, t) for t in ts])
            except pr.BlowupError:
                continue
            keep = (np.abs(pts) < lim).all(axis=1)
            ax.plot(pts[keep, 0], pts[keep, 1], color="#35618f", lw=0.4, alpha=0.5)
    # the state's own trajectory
    st = state
    if abs(st.b0 + st.c0) > 1e-12:
        tmax = pr.max_time(st)
        tend = min(0.9 * tmax if math.isfinite(tmax) else 4.0 / st.k, 4.0 / st.k)
        ts = np.linspace(0, tend, 200)[1:]
        pts = []
        for t in ts:
            try:
                pts.append(pr.trajectory(st, t))
            except pr.BlowupError:
                break
        if pts:
            pts = np.array(pts)
            ax.plot(pts[:, 0], pts[:, 1], color="#a33", lw=2)
    ax.plot([st.b0], [st.c0], "o", color="#a33", ms=6)
    ax.set_xlim(-lim, lim)
    ax.set_ylim(-lim, lim)
    ax.set_xlabel("b")
    ax.set_ylabel("c")
    ax.set_title("precessing phase plane")
    ax.legend(fontsize=8, loc="lower left")
    return save(fig, path)


def beta_sweep_figure(report, path):
    fig, ax = plt.subplots(figsize=(5, 3.4))
    betas = [r.beta for r in report.rows]
    grades = sorted(report.rows[0].residuals)
    for g in grades:
        ax.semilogy(betas, [max(r.residuals[g], 1e-300) for r in report.rows],
                    "o-", label=f"grade {g}")
    ax.set_xlabel("beta")
    ax.set_ylabel("residual vs target")
    ax.set_title(f"{report.domain.value}: fractionation toward {report.kind.value}")
    ax.legend(fontsize=8)
    return save(fig, path)
