"""Seeded sweeps over the experiment grid, figure fits and CSV output."""

from __future__ import annotations

import csv
import json
import math
import multiprocessing
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .. import dynamics, estimators, linalg, models, theory
from .config import ConfigError, ExperimentConfig

CSV_COLUMNS = (
    "experiment",
    "n_total",
    "n_b",
    "g",
    "beta",
    "seed",
    "delta2",
    "inv_gamma",
    "gamma_fit",
    "dos_bar",
    "chi",
    "chi_times_dos",
    "fit_flag",
)


@dataclass
class PointRecord:
    experiment: str
    n_total: int
    n_b: int
    g: float
    beta: float
    seed: int
    delta2: float = math.nan
    inv_gamma: float = math.nan
    gamma_fit: float = math.nan
    dos_bar: float = math.nan
    chi: float = math.nan
    chi_times_dos: float = math.nan
    fit_flag: str = "ok"
    diagnostics: dict = field(default_factory=dict)

    @property
    def failed(self) -> bool:
        return self.fit_flag == "failed"

    def fdt_point(self) -> estimators.FdtPoint:
        return estimators.FdtPoint(
            self.n_total, self.n_b, self.g, self.beta, self.delta2, self.inv_gamma, self.dos_bar, self.gamma_fit
        )


@dataclass
class SweepResult:
    config: ExperimentConfig
    records: list
    fits: list = field(default_factory=list)

    @property
    def any_failed(self) -> bool:
        return any(r.failed for r in self.records)


def point_seed(master_seed: int, index: int) -> int:
    """Per-point seed from ``(master_seed, grid index)``, independent of scheduling."""
    ss = np.random.SeedSequence([int(master_seed), int(index)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def worker_count(n_tasks: int) -> int:
    raw = os.environ.get("ERGOPROBE_PARALLELISM")
    if raw is None or raw.strip() == "":
        cap = os.cpu_count() or 1
    else:
        try:
            cap = int(raw)
        except ValueError:
            raise ConfigError(f"ERGOPROBE_PARALLELISM must be a positive integer, got {raw!r}") from None
        if cap < 1:
            raise ConfigError("ERGOPROBE_PARALLELISM must be >= 1")
    return max(1, min(cap, n_tasks))


# --------------------------------------------------------------------------
# single grid points


def _w_o(cfg: ExperimentConfig, obs, beta: float, gamma: float) -> tuple[float, str]:
    regime = cfg.w_o_regime
    if regime == "auto":
        regime = "low_T" if beta * gamma > 1.0 else "high_T"
    return theory.w_o_constant(theory.ObservableMoments.from_observable(obs), regime), regime


def _e0(cfg: ExperimentConfig, e0s: np.ndarray, chain: bool) -> float:
    if chain:
        return float(e0s.min() + cfg.e0_fraction * np.ptp(e0s))
    return float(cfg.e0_fraction * e0s.max())


def _measure(cfg, rec: PointRecord, frame: models.Frame, spectrum, gamma_pred: float | None):
    chain = cfg.is_chain
    e0 = _e0(cfg, frame.e0, chain)
    if not cfg.cutoff and cfg.e0_fraction == 0.0:
        e0 = float(frame.e0.min())  # pure offset; cancels on normalization
    w = models.thermal_weights(frame.e0, rec.beta, e0=e0, cutoff=cfg.cutoff)
    obs = models.make_observable(cfg.observable, frame.dim)
    ops = dynamics.rotate_to_eigenbasis(w, obs, spectrum)
    o_free = dynamics.free_evolution(w, obs, frame.e0, 0.0)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", dynamics.DegeneracyWarning)
        delta2_closed = dynamics.fluctuations_infinite(ops)
    if caught:
        rec.diagnostics["degenerate"] = True
    meas = estimators.measure_decay(ops, o_free, tail_tol=cfg.tail_tol)
    if cfg.delta2_method == "windowed":
        g_for_t = gamma_pred if gamma_pred else meas.gamma_fit
        delta2, _ = dynamics.fluctuations_windowed(ops, cfg.t_max_factor / g_for_t, cfg.n_time_samples)
        rec.diagnostics["delta2_closed"] = delta2_closed
    else:
        delta2 = delta2_closed
    rec.delta2 = float(delta2)
    rec.inv_gamma = meas.inv_gamma
    rec.gamma_fit = meas.gamma_fit
    rec.dos_bar = estimators.dos_average(spectrum.energies)
    rec.chi = estimators.chi_estimate(rec.delta2, rec.inv_gamma)
    rec.chi_times_dos = rec.chi * rec.dos_bar
    rec.diagnostics.update(o_free=o_free, o_de=meas.o_de, reference=meas.reference, e0=e0, populated=int(w.sector.sum()))
    return w, obs, ops


def _rmt_point(cfg: ExperimentConfig, rec: PointRecord):
    spec = models.RmtSpec(rec.n_total, rec.g, rec.seed)
    frame = models.rmt_frame(spec)
    spectrum = linalg.eigh(frame.hamiltonian())
    gamma = theory.gamma_fgr(rec.g, spec.n, spec.omega0)
    w, obs, ops = _measure(cfg, rec, frame, spectrum, gamma)
    w_o, regime = _w_o(cfg, obs, rec.beta, gamma)
    pred = theory.predict_delta2_finite_T(
        w_o,
        rec.beta,
        frame.e0,
        lambda e: np.full_like(e, gamma),
        lambda e: np.full_like(e, 1.0 / spec.omega0),
        e0=rec.diagnostics["e0"],
        cutoff=cfg.cutoff,
    )
    rec.diagnostics.update(
        gamma_theory=gamma,
        w_o=w_o,
        w_o_regime=regime,
        delta2_predicted=pred.delta2,
        ratio=rec.delta2 / pred.delta2,
        delta2_contractions=theory.predict_delta2_contractions(w.w, obs.d, spectrum.energies, frame.e0, gamma, spec.omega0),
    )
    if cfg.experiment == "decay":
        t = np.linspace(0.0, cfg.t_max_factor / gamma, cfg.n_time_samples)
        series = dynamics.observable_series(ops, t)
        rec.diagnostics.update(times=series.times.tolist(), values=series.values.tolist())


def _chain_point(cfg: ExperimentConfig, rec: PointRecord):
    spec = models.SpinChainSpec.with_coupling(rec.n_total, rec.g, **cfg.chain)
    frame = models.spin_chain_frame(spec)
    spectrum = linalg.eigh(frame.hamiltonian())
    _measure(cfg, rec, frame, spectrum, None)


def _correlator_point(cfg: ExperimentConfig, rec: PointRecord):
    spec = models.RmtSpec(rec.n_total, rec.g, rec.seed)
    rep = estimators.correlator_ensemble(spec, cfg.corr_m, n_pairs=cfg.corr_pairs)
    rec.gamma_fit = rep.gamma_fit
    rec.diagnostics.update(
        gamma_theory=rep.gamma_theory,
        width_rel_error=abs(rep.gamma_fit / rep.gamma_theory - 1.0),
        negative_fraction=rep.negative_fraction,
        norm_error=rep.norm_error,
        summary=rep.summary(),
    )


_POINTS = {
    "rmt_fdt": _rmt_point,
    "decay": _rmt_point,
    "chain_fdt": _chain_point,
    "scaling": _chain_point,
    "correlators": _correlator_point,
}


def run_point(cfg: ExperimentConfig, index: int) -> PointRecord:
    """Evaluate grid point ``index``; any failure is recorded in the row, not raised."""
    n, g, beta = cfg.grid()[index]
    n_b = 2 ** (n - 1) if cfg.is_chain else n // 2
    rec = PointRecord(cfg.experiment, n, n_b, g, beta, point_seed(cfg.master_seed, index))
    try:
        _POINTS[cfg.experiment](cfg, rec)
    except Exception as exc:  # crash isolation: one bad point must not sink the sweep
        rec.fit_flag = "failed"
        for name in ("delta2", "inv_gamma", "gamma_fit", "dos_bar", "chi", "chi_times_dos"):
            setattr(rec, name, math.nan)
        rec.diagnostics["error"] = f"{type(exc).__name__}: {exc}"
    return rec


def _task(args):
    return run_point(*args)


# --------------------------------------------------------------------------
# sweep, fits, files


def _groups(records, key):
    out = {}
    for r in records:
        out.setdefault(key(r), []).append(r)
    return out


def figure_fits(cfg: ExperimentConfig, records) -> list:
    ok = [r for r in records if not r.failed]
    fits = []
    if cfg.experiment == "chain_fdt":
        for (n, beta), grp in _groups(ok, lambda r: (r.n_total, r.beta)).items():
            if len(grp) < 2:
                continue
            f = estimators.linear_fit([r.inv_gamma for r in grp], [r.delta2 for r in grp])
            fits.append(dict(kind="linear", n_total=n, beta=beta, slope=f["slope"], intercept=f["intercept"], r_squared=f.r_squared))
    elif cfg.experiment == "scaling":
        for (g, beta), grp in _groups(ok, lambda r: (r.g, r.beta)).items():
            if len(grp) < 3:
                continue
            pts = [(r.n_total, r.chi_times_dos) for r in grp]
            f = estimators.fit_exponential_scaling(pts)
            fc = estimators.fit_exponential_scaling([(r.n_total, r.chi) for r in grp])
            fits.append(dict(kind="exponential", g=g, beta=beta, a=f["a"], c=f["c"], r_squared=f.r_squared, c_chi=fc["c"]))
    elif cfg.experiment == "rmt_fdt":
        for (n, beta), grp in _groups(ok, lambda r: (r.n_total, r.beta)).items():
            ratios = [r.diagnostics["ratio"] for r in grp]
            fits.append(dict(kind="ratio", n_total=n, beta=beta, ratio_mean=float(np.mean(ratios)), ratios=ratios))
    return fits


def run(cfg: ExperimentConfig, *, write: bool = True) -> SweepResult:
    grid = cfg.grid()
    tasks = [(cfg, i) for i in range(len(grid))]
    workers = worker_count(len(tasks))
    if workers == 1:
        records = [_task(t) for t in tasks]
    else:
        ctx = multiprocessing.get_context("spawn")
        with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as pool:
            records = list(pool.map(_task, tasks))  # map keeps grid order
    result = SweepResult(cfg, records, figure_fits(cfg, records))
    if write:
        out = Path(cfg.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        emit_csv(result, out / f"{cfg.experiment}.csv")
        emit_summary(result, out / f"{cfg.experiment}_summary.json")
        kind = DEFAULT_PLOT.get(cfg.experiment)
        if cfg.plot and kind:
            from .plots import emit_plot

            emit_plot(result, kind, out / f"{cfg.experiment}.svg")
    return result


DEFAULT_PLOT = {"rmt_fdt": "fdt_line", "chain_fdt": "fdt_line", "scaling": "scaling_semilog", "decay": "decay_curves"}


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(v)
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def emit_csv(result: SweepResult, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(CSV_COLUMNS)
        for r in result.records:
            wr.writerow([_fmt(getattr(r, c)) for c in CSV_COLUMNS])
    return path


def read_csv(path) -> list:
    """Parse a sweep CSV back into dicts with numeric fields restored."""
    ints = {"n_total", "n_b", "seed"}
    text = {"experiment", "fit_flag"}
    rows = []
    with Path(path).open(newline="") as fh:
        for row in csv.DictReader(fh):
            rows.append({k: (v if k in text else int(v) if k in ints else float(v)) for k, v in row.items()})
    return rows


def emit_summary(result: SweepResult, path) -> Path:
    def clean(d):
        return {k: v for k, v in d.items() if k not in ("times", "values")}

    payload = {
        "config": asdict(result.config),
        "fits": result.fits,
        "points": [dict(index=i, fit_flag=r.fit_flag, **clean(r.diagnostics)) for i, r in enumerate(result.records)],
    }
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True, default=float))
    return Path(path)
