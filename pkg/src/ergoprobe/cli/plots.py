"""Static SVG figures for sweep results."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .. import estimators, theory  # noqa: E402

_KINDS = {
    "fdt_line": ("rmt_fdt", "chain_fdt"),
    "scaling_semilog": ("scaling",),
    "decay_curves": ("decay",),
}


def _caption(ax, lines):
    ax.text(0.02, 0.02, "\n".join(lines), transform=ax.transAxes, fontsize=8, va="bottom", family="monospace",
            bbox=dict(facecolor="white", edgecolor="0.7"))


def _fdt_line(result, ax):
    recs = [r for r in result.records if not r.failed]
    x = np.array([r.inv_gamma for r in recs])
    y = np.array([r.delta2 for r in recs])
    ax.plot(x, y, "o", label="measured")
    lines = []
    if len(recs) >= 2 and np.ptp(x) > 0:
        f = estimators.linear_fit(x, y)
        xx = np.linspace(0.0, x.max() * 1.05, 50)
        ax.plot(xx, f["slope"] * xx + f["intercept"], "-", label="linear fit")
        lines.append(f"chi = {f['slope']:.4g}  intercept = {f['intercept']:.3g}  R^2 = {f.r_squared:.4f}")
    ax.set_xlabel("measured mean inverse rate")
    ax.set_ylabel("delta^2")
    return lines


def _scaling(result, ax):
    recs = [r for r in result.records if not r.failed]
    n = np.array([r.n_total for r in recs], dtype=float)
    y = np.array([r.chi_times_dos for r in recs])
    ax.semilogy(n, y, "o", label="chi * Dbar")
    lines = []
    if len(recs) >= 3:
        f = estimators.fit_exponential_scaling(np.column_stack([n, y]))
        nn = np.linspace(n.min(), n.max(), 50)
        ax.semilogy(nn, f["a"] * np.exp(-f["c"] * nn), "-", label="a exp(-c N)")
        lines.append(f"c = {f['c']:.4f}  (ln 2 = {np.log(2):.4f})  R^2 = {f.r_squared:.4f}")
    ax.set_xlabel("n_total")
    ax.set_ylabel("chi * Dbar")
    return lines


def _decay(result, ax):
    lines = []
    for r in result.records:
        if r.failed or "times" not in r.diagnostics:
            continue
        d = r.diagnostics
        t = np.asarray(d["times"])
        ax.plot(t, d["values"], "-", lw=1, label=f"g={r.g:g} beta={r.beta:g}")
        ax.plot(t, theory.predict_decay(t, d["o_free"], d["reference"], d["gamma_theory"]), "--", lw=1, color="k")
        lines.append(f"g={r.g:g} beta={r.beta:g}: Gamma = {d['gamma_theory']:.4g}, O_DE = {d['o_de']:.4f}")
    ax.set_xlabel("t")
    ax.set_ylabel(result.config.observable)
    return lines


def emit_plot(result, kind: str, path) -> Path:
    if kind not in _KINDS:
        raise ValueError(f"unknown plot kind {kind!r}")
    if result.config.experiment not in _KINDS[kind]:
        raise ValueError(f"plot kind {kind!r} does not apply to experiment {result.config.experiment!r}")
    fig, ax = plt.subplots(figsize=(6, 4.5))
    lines = {"fdt_line": _fdt_line, "scaling_semilog": _scaling, "decay_curves": _decay}[kind](result, ax)
    if lines:
        _caption(ax, lines)
    ax.legend(fontsize=8, loc="upper right")
    ax.set_title(f"{result.config.experiment} (seed {result.config.master_seed})", fontsize=10)
    fig.tight_layout()
    path = Path(path)
    with plt.rc_context({"svg.hashsalt": "ergoprobe"}):
        fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path
