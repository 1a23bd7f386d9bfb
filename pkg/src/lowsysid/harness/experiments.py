"""Dataset generation, fits, sweeps and spectra, writing flat files.

A dataset directory holds ``rollouts.lsb`` (array container), ``system.json``
(ground truth) and ``manifest.json``; the manifest is the single source of
truth for the reference impulse response used in every recovery error.
"""
from __future__ import annotations

import dataclasses
import hashlib
import math
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Optional

import numpy as np

from .. import io
from ..linops import ImpulseResponse, MarkovSequence, toeplitz_blocks
from ..metrics import hankel_spectrum
from ..solvers import SOLVERS, DivergenceError, SolveReport, TRACE_COLUMNS, shared_init
from ..solvers.report import DIVERGED
from ..system import GenConfig, RolloutBatch, generate
from .config import ExperimentConfig, dump_config

ROLLOUTS_FILE = "rollouts.lsb"
SYSTEM_FILE = "system.json"
MANIFEST_FILE = "manifest.json"
SUMMARY_FILE = "summary.csv"
REPORT_FILE = "report.txt"
SWEEP_FILE = "sweep.csv"
SPECTRUM_FILE = "spectrum.csv"
CONFIG_ECHO = "config.yaml"

SUMMARY_COLUMNS = ("method", "certificate", "final_recovery_error", "final_polar", "final_rank",
                   "effective_rank", "iterations", "total_time_s", "message")
SWEEP_COLUMNS = ("row_kind", "axis", "value", "method", "n", "l", "final_recovery_error",
                 "total_time_s", "certificate", "final_rank", "loglog_slope")
SPECTRUM_COLUMNS = ("method", "iter", "index", "singular_value", "true_singular_value")
TIMING_COLUMNS = ("wall_clock_s", "total_time_s")


@dataclasses.dataclass(frozen=True)
class Dataset:
    batch: RolloutBatch
    truth: MarkovSequence
    truth_d: np.ndarray
    manifest: dict

    def truth_impulse(self) -> ImpulseResponse:
        k = self.truth
        return ImpulseResponse(toeplitz_blocks(k.blocks, self.truth_d), k.l, k.n_y, k.n_u)


def trace_file(method: str) -> str:
    return f"trace_{method}.csv"


def checkpoint_file(method: str) -> str:
    return f"checkpoints_{method}.lsb"


def fitted_system_file(method: str) -> str:
    return f"system_{method}.json"


# ---------------------------------------------------------------- gen

def make_dataset(gen: GenConfig) -> tuple[Dataset, object]:
    sys, batch = generate(gen)
    truth = sys.markov(gen.l)
    manifest = {
        "format_version": io.FORMAT_VERSION,
        "gen": dataclasses.asdict(gen),
        "seed": gen.seed,
        "n_x_star": gen.n_x_star, "n_u": gen.n_u, "n_y": gen.n_y,
        "n": gen.n, "l": gen.l, "t": batch.t,
        "true_hankel_singular_values": [float(s) for s in hankel_spectrum(truth)],
        "true_markov": io.markov_to_list(truth),
        "true_d": io.matrix_to_list(sys.d),
        "files": {"rollouts": ROLLOUTS_FILE, "system": SYSTEM_FILE},
    }
    return Dataset(batch, truth, np.array(sys.d), manifest), sys


def cmd_gen(cfg: ExperimentConfig, out) -> Path:
    """Write the dataset for ``cfg.gen`` into ``out``; byte-identical on reruns."""
    out = Path(out)
    ds, sys = make_dataset(cfg.gen)
    payload = io.encode_batch(ds.batch)
    manifest = dict(ds.manifest, rollouts_sha256=hashlib.sha256(payload).hexdigest())
    io.atomic_write(out / ROLLOUTS_FILE, payload)
    io.save_system(sys, out / SYSTEM_FILE)
    io.save_json(manifest, out / MANIFEST_FILE)
    return out


def load_dataset(path) -> Dataset:
    path = Path(path)
    manifest = io.load_json(path / MANIFEST_FILE)
    raw = (path / manifest["files"]["rollouts"]).read_bytes()
    digest = manifest.get("rollouts_sha256")
    if digest is not None and hashlib.sha256(raw).hexdigest() != digest:
        raise io.FormatError("rollout file does not match the manifest checksum")
    batch = io.decode_batch(raw)
    truth = io.markov_from_list(manifest["true_markov"])
    return Dataset(batch, truth, np.array(manifest["true_d"], dtype=float), manifest)


# ---------------------------------------------------------------- fit

def _run_method(args):
    method, batch, solver_cfg, truth = args
    markov, factors, modes = shared_init(batch, solver_cfg)
    init = {"nuc": markov, "bm": factors, "sp": modes}[method]
    try:
        return SOLVERS[method](batch, solver_cfg, init, truth=truth)
    except DivergenceError as exc:
        report = exc.report
        report.message = str(exc)
        return report


def fit_batch(batch: RolloutBatch, truth: Optional[ImpulseResponse], cfg: ExperimentConfig,
              jobs: Optional[int] = None) -> dict:
    """Run every configured method from the shared initialization; divergence is recorded, not raised."""
    tasks = [(m, batch, cfg.solver(m), truth) for m in cfg.methods]
    jobs = cfg.jobs if jobs is None else jobs
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
            reports = list(pool.map(_run_method, tasks))
    else:
        reports = [_run_method(t) for t in tasks]
    return dict(zip(cfg.methods, reports))


def summary_row(r: SolveReport) -> tuple:
    return (r.method, r.certificate, r.final_recovery_error(), r.final_polar, r.final_rank,
            r.effective_rank, r.iterations, r.total_time_s, r.message)


def report_text(reports: dict) -> str:
    """Structured-text report: one ``[method]`` block of ``key = value`` lines per method."""
    lines = []
    for m, r in reports.items():
        lines.append(f"[{m}]")
        for key, value in zip(SUMMARY_COLUMNS[1:], summary_row(r)[1:]):
            lines.append(f"{key} = {io.fmt(value)}")
        lines.append("")
    return "\n".join(lines)


def write_fit(reports: dict, cfg: ExperimentConfig, out) -> Path:
    out = Path(out)
    for m, r in reports.items():
        io.write_csv(out / trace_file(m), TRACE_COLUMNS, (row.values() for row in r.trace))
        if r.checkpoints:
            io.save_checkpoints(r.checkpoints, out / checkpoint_file(m))
        io.save_system(r.final_sys, out / fitted_system_file(m))
    io.write_csv(out / SUMMARY_FILE, SUMMARY_COLUMNS, (summary_row(r) for r in reports.values()))
    if cfg.report_format == "structured-text":
        io.atomic_write(out / REPORT_FILE, report_text(reports))
    io.atomic_write(out / CONFIG_ECHO, dump_config(cfg))
    if cfg.svg:
        from . import plots
        plots.error_vs_time_svg(reports, out / "recovery_error.svg")
    return out


def cmd_fit(dataset: Dataset, cfg: ExperimentConfig, out) -> dict:
    reports = fit_batch(dataset.batch, dataset.truth_impulse(), cfg)
    write_fit(reports, cfg, out)
    return reports


def all_diverged(reports: dict) -> bool:
    return bool(reports) and all(r.certificate == DIVERGED for r in reports.values())


# ---------------------------------------------------------------- sweep

def loglog_slope(x, y) -> float:
    """Least-squares slope of ``log y`` on ``log x``; NaN with fewer than two usable points."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ok = (x > 0) & (y > 0) & np.isfinite(y)
    if ok.sum() < 2:
        return math.nan
    return float(np.polyfit(np.log(x[ok]), np.log(y[ok]), 1)[0])


def sweep_points(cfg: ExperimentConfig, dataset: Optional[Dataset] = None):
    """Yield ``(value, Dataset)`` per grid point of the configured axis."""
    sweep = cfg.sweep
    if sweep.axis == "none":
        yield None, dataset if dataset is not None else make_dataset(cfg.gen)[0]
        return
    if sweep.axis == "samples":
        base = dataset
        if base is None:
            gen = dataclasses.replace(cfg.gen, n=max(cfg.gen.n, sweep.values[-1]))
            base = make_dataset(gen)[0]
        if sweep.values[-1] > base.batch.n:
            raise ValueError(f"sweep needs {sweep.values[-1]} rollouts, dataset has {base.batch.n}")
        for n in sweep.values:
            yield n, dataclasses.replace(base, batch=base.batch.head(n))
        return
    budget = cfg.gen.n * sweep.values[0]
    for l in sweep.values:
        n = max(1, int(round(budget / l))) if sweep.fixed_nl and sweep.values[0] > 0 else cfg.gen.n
        yield l, make_dataset(dataclasses.replace(cfg.gen, l=l, n=n))[0]


def run_sweep(cfg: ExperimentConfig, dataset: Optional[Dataset] = None) -> list:
    """Long-format rows: one ``point`` row per (grid value, method), then one ``slope`` row per method."""
    rows = []
    per_method: dict = {m: ([], []) for m in cfg.methods}
    axis = cfg.sweep.axis
    for value, ds in sweep_points(cfg, dataset):
        reports = fit_batch(ds.batch, ds.truth_impulse(), cfg)
        for m, r in reports.items():
            err = r.final_recovery_error()
            rows.append(("point", axis, value, m, ds.batch.n, ds.batch.l, err, r.total_time_s,
                         r.certificate, r.final_rank, math.nan))
            if value is not None:
                per_method[m][0].append(value)
                per_method[m][1].append(err)
    if axis != "none":
        for m, (xs, ys) in per_method.items():
            rows.append(("slope", axis, None, m, None, None, math.nan, math.nan, "", None,
                         loglog_slope(xs, ys)))
    return rows


def cmd_sweep(cfg: ExperimentConfig, out, dataset: Optional[Dataset] = None) -> list:
    rows = run_sweep(cfg, dataset)
    out = Path(out)
    io.write_csv(out / SWEEP_FILE, SWEEP_COLUMNS, rows)
    io.atomic_write(out / CONFIG_ECHO, dump_config(cfg))
    if cfg.svg:
        from . import plots
        plots.sweep_svg(rows, out / "sweep.svg")
    return rows


# ---------------------------------------------------------------- spectrum

def spectrum_rows(dataset: Dataset, fit_dir, methods) -> list:
    """Descending Hankel spectra at every stored checkpoint, next to the true spectrum."""
    fit_dir = Path(fit_dir)
    true = hankel_spectrum(dataset.truth)
    rows = []
    found = False
    for m in methods:
        path = fit_dir / checkpoint_file(m)
        if not path.exists():
            continue
        found = True
        for it, k in io.load_checkpoints(path):
            if k.blocks.shape != dataset.truth.blocks.shape:
                raise io.FormatError(f"{path}: checkpoint shape does not match the dataset")
            for idx, (s, t) in enumerate(zip(hankel_spectrum(k), true)):
                rows.append((m, it, idx + 1, float(s), float(t)))
    if not found:
        raise FileNotFoundError(f"no checkpoint files in {fit_dir}")
    return rows


def cmd_spectrum(dataset: Dataset, fit_dir, cfg: ExperimentConfig, out) -> list:
    rows = spectrum_rows(dataset, fit_dir, cfg.methods)
    io.write_csv(Path(out) / SPECTRUM_FILE, SPECTRUM_COLUMNS, rows)
    if cfg.svg:
        from . import plots
        plots.spectrum_svg(rows, Path(out) / "spectrum.svg", dataset.manifest.get("n_x_star"))
    return rows
