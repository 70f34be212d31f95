"""Experiment orchestration: sweeps, per-trial records, and result files.

An :class:`ExperimentSpec` describes a grid of (element count, spacing)
points, a fading model, the architectures and coupling-awareness modes to
run, a trial count, and a seed.  ``run_experiment`` executes the grid with
per-trial derived seeds (bit-identical results regardless of the worker
count), never aborts on per-trial numerical failures, and returns trial
records plus aggregated summary rows.  ``emit_outputs`` writes the records
as CSV together with a declarative plot specification.
"""

from __future__ import annotations

import csv
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .core import ReferenceImpedance
from .coupling import CouplingMatrix, DipoleArrayGeometry, build_coupling_matrix
from .errors import CoupledRisError
from .optimize import (
    Architecture,
    evaluate_under,
    optimize_dris_aware,
    optimize_dris_unaware,
    optimize_fully_connected,
    optimize_tree_connected,
    upper_bound_fc,
)
from .sampling import FadingSpec, sample_channels, trial_rng
from .scaling import estimate_terms, scaling_mc, scaling_nomc

#: Fraction of failed trials above which an experiment reports failure.
FAILURE_THRESHOLD = 0.01

TRIALS_CSV_HEADER = (
    "experiment,n,spacing_wl,architecture,awareness,trial,"
    "gain_linear,gain_db,bound_linear,residual,runtime_ms,error"
)

SUMMARY_CSV_HEADER = (
    "experiment,n,spacing_wl,architecture,awareness,trials,failures,"
    "mean_gain_linear,stderr_gain_linear,mean_gain_db,stderr_gain_db,mean_bound_linear"
)


class ExperimentKind(Enum):
    SWEEP_N = "sweep_n"
    SWEEP_SPACING = "sweep_spacing"
    SCALING_VALIDATION = "scaling_validation"
    SINGLE_INSTANCE = "single_instance"
    SELF_TEST = "self_test"


class Awareness(Enum):
    AWARE = "aware"          # optimizer sees the true coupling
    UNAWARE = "unaware"      # optimizer assumes Z0 I, evaluated under the truth
    NO_COUPLING = "no_coupling"  # reference world where the truth is Z0 I


@dataclass(frozen=True)
class DipoleGridTemplate:
    """Geometry parameters shared by every (n, spacing) grid point."""

    n_x: int = 8
    frequency: float = 28e9
    dipole_length_wl: float = 0.25
    wire_radius_wl: float = 0.002
    self_impedance: complex = 50.0 + 0.0j

    def materialize(self, n, spacing_wl) -> DipoleArrayGeometry:
        return DipoleArrayGeometry.upa(
            n, spacing_wl, n_x=self.n_x, frequency=self.frequency,
            dipole_length_wl=self.dipole_length_wl, wire_radius_wl=self.wire_radius_wl,
        )


#: Path gain used throughout the default experiments: 4 Z0^2 1e-8.
DEFAULT_RHO = 4.0 * 50.0**2 * 1e-8

#: Spacing grid (in wavelengths) of the default spacing sweep, chosen to
#: expose the multi-dB coupling-unaware degradation regime.
DEFAULT_SPACING_GRID = (0.5, 0.4, 0.33, 0.25, 0.2, 0.167, 0.125)


@dataclass(frozen=True)
class ExperimentSpec:
    kind: ExperimentKind
    n_list: tuple = (64,)
    spacing_list: tuple = (0.25,)
    fading: FadingSpec = FadingSpec(DEFAULT_RHO, DEFAULT_RHO)
    trials: int = 1000
    seed: int = 0
    architectures: tuple = (Architecture.FULLY_CONNECTED,)
    awareness: tuple = (Awareness.AWARE,)
    geometry: DipoleGridTemplate = DipoleGridTemplate()
    z0: ReferenceImpedance = ReferenceImpedance(50.0)
    experiment_id: str = ""

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        for n in self.n_list:
            if n % min(self.geometry.n_x, n):
                raise ValueError(
                    f"element count {n} is not divisible by n_x={self.geometry.n_x}"
                )
        if not self.experiment_id:
            object.__setattr__(self, "experiment_id", self.kind.value)


@dataclass
class TrialRecord:
    experiment: str
    n: int
    spacing_wl: float
    architecture: str
    awareness: str
    trial: int
    gain_linear: float
    gain_db: float
    bound_linear: float
    residual: float
    runtime_ms: float
    error: str = ""

    def csv_row(self):
        return [
            self.experiment, self.n, _fmt(self.spacing_wl), self.architecture,
            self.awareness, self.trial, _fmt(self.gain_linear), _fmt(self.gain_db),
            _fmt(self.bound_linear), _fmt(self.residual), _fmt(self.runtime_ms),
            self.error,
        ]


@dataclass
class SummaryRow:
    experiment: str
    n: int
    spacing_wl: float
    architecture: str
    awareness: str
    trials: int
    failures: int
    mean_gain_linear: float
    stderr_gain_linear: float
    mean_gain_db: float
    stderr_gain_db: float
    mean_bound_linear: float

    def csv_row(self):
        return [
            self.experiment, self.n, _fmt(self.spacing_wl), self.architecture,
            self.awareness, self.trials, self.failures, _fmt(self.mean_gain_linear),
            _fmt(self.stderr_gain_linear), _fmt(self.mean_gain_db),
            _fmt(self.stderr_gain_db), _fmt(self.mean_bound_linear),
        ]


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    records: list = field(default_factory=list)
    summaries: list = field(default_factory=list)
    scaling_rows: list = field(default_factory=list)
    failure_fraction: float = 0.0

    @property
    def ok(self) -> bool:
        return self.failure_fraction <= FAILURE_THRESHOLD


def _fmt(value) -> str:
    if value is None or (isinstance(value, float) and not np.isfinite(value)):
        return "nan"
    return format(float(value), ".12g")


def _to_db(gain):
    if gain is None or gain <= 0 or not np.isfinite(gain):
        return float("nan")
    return 10.0 * np.log10(gain)


def _run_point_trial(spec, n, spacing_wl, truth, assumed, trial):
    """All (architecture, awareness) records of one trial at one grid point.

    Channels are shared across architectures and awareness modes (and across
    spacings: the fading does not depend on the geometry), so curves over the
    grid are paired comparisons.
    """
    chan = sample_channels(spec.fading, n, trial_rng(spec.seed, n, trial))
    true_bound = upper_bound_fc(chan, truth, spec.z0)
    records = []
    for arch in spec.architectures:
        for mode in spec.awareness:
            start = time.perf_counter()
            gain = bound = residual = float("nan")
            error = ""
            try:
                gain, bound, residual = _optimize_one(
                    chan, arch, mode, truth, assumed, true_bound, spec.z0)
            except CoupledRisError as exc:
                error = f"{type(exc).__name__}: {exc}"
            runtime_ms = (time.perf_counter() - start) * 1e3
            records.append(TrialRecord(
                spec.experiment_id, n, spacing_wl, arch.value, mode.value, trial,
                gain, _to_db(gain), bound, residual, runtime_ms, error,
            ))
    return records


def _optimize_one(chan, arch, mode, truth, assumed, true_bound, z0):
    if arch is Architecture.FULLY_CONNECTED:
        solver = optimize_fully_connected
    elif arch is Architecture.TREE_TRIDIAGONAL:
        solver = optimize_tree_connected
    else:
        solver = None

    if mode is Awareness.AWARE:
        config = (solver(chan, truth, z0) if solver
                  else optimize_dris_aware(chan, truth, z0))
        return config.achieved_gain, config.bound_gain, config.residual
    if mode is Awareness.UNAWARE:
        config = (solver(chan, assumed, z0) if solver
                  else optimize_dris_unaware(chan, z0))
        gain = evaluate_under(config, chan, truth, z0)
        return gain, true_bound, config.residual
    # NO_COUPLING: the reference world itself has no mutual coupling
    config = (solver(chan, assumed, z0) if solver
              else optimize_dris_unaware(chan, z0))
    return config.achieved_gain, config.bound_gain, config.residual


def run_experiment(spec, threads=1):
    """Execute an experiment grid and aggregate summaries.

    Per-trial failures are recorded in the ``error`` column and never abort
    the sweep; ``result.ok`` turns false when more than
    ``FAILURE_THRESHOLD`` of the trials failed.
    """
    if spec.kind is ExperimentKind.SCALING_VALIDATION:
        return _run_scaling_validation(spec)

    result = ExperimentResult(spec)
    failures = 0
    for n in spec.n_list:
        for spacing_wl in spec.spacing_list:
            geom = spec.geometry.materialize(n, spacing_wl)
            truth = build_coupling_matrix(geom, spec.geometry.self_impedance)
            assumed = CouplingMatrix.no_coupling(n, spec.z0.z0)
            trials = range(spec.trials)
            if threads > 1:
                with ThreadPoolExecutor(max_workers=threads) as pool:
                    per_trial = list(pool.map(
                        lambda t: _run_point_trial(spec, n, spacing_wl, truth, assumed, t),
                        trials,
                    ))
            else:
                per_trial = [
                    _run_point_trial(spec, n, spacing_wl, truth, assumed, t)
                    for t in trials
                ]
            for records in per_trial:
                result.records.extend(records)
                failures += sum(1 for r in records if r.error)

    result.failure_fraction = failures / max(len(result.records), 1)
    result.summaries = summarize(result.records)
    return result


def summarize(records):
    """Mean and standard error per (n, spacing, architecture, awareness).

    Gains are averaged in linear units; the dB columns report the dB value of
    the linear mean with a delta-method standard error.
    """
    groups = {}
    for rec in records:
        groups.setdefault(
            (rec.experiment, rec.n, rec.spacing_wl, rec.architecture, rec.awareness), []
        ).append(rec)
    rows = []
    for key in sorted(groups, key=lambda k: tuple(map(str, k))):
        recs = groups[key]
        gains = np.array([r.gain_linear for r in recs if not r.error])
        bounds = np.array([r.bound_linear for r in recs if not r.error])
        failures = sum(1 for r in recs if r.error)
        if gains.size:
            mean = float(gains.mean())
            stderr = float(gains.std(ddof=1) / np.sqrt(gains.size)) if gains.size > 1 else 0.0
            mean_db = _to_db(mean)
            stderr_db = (10.0 / np.log(10.0)) * stderr / mean if mean > 0 else float("nan")
            mean_bound = float(bounds.mean())
        else:
            mean = stderr = mean_db = stderr_db = mean_bound = float("nan")
        rows.append(SummaryRow(*key, len(recs), failures, mean, stderr,
                               mean_db, stderr_db, mean_bound))
    return rows


def _run_scaling_validation(spec):
    result = ExperimentResult(spec)
    for n in spec.n_list:
        for spacing_wl in spec.spacing_list:
            geom = spec.geometry.materialize(n, spacing_wl)
            truth = build_coupling_matrix(geom, spec.geometry.self_impedance)
            report = estimate_terms(spec.fading, truth, spec.z0, spec.trials, spec.seed)
            row = {
                "n": n,
                "spacing_wl": spacing_wl,
                "law_mc": scaling_mc(spec.fading, truth, spec.z0),
                "law_nomc": scaling_nomc(
                    spec.fading, float(np.real(spec.geometry.self_impedance)), n, spec.z0),
                "mc_estimate": report.monte_carlo_mean,
                "mc_stderr": report.monte_carlo_stderr,
            }
            for key, term in report.per_term.items():
                row[f"{key}_cf"] = term.closed_form
                row[f"{key}_est"] = term.estimate
                row[f"{key}_stderr"] = term.stderr
            result.scaling_rows.append(row)
    return result


def emit_outputs(result, out_dir):
    """Write trials/summary CSVs and a plot spec; returns the written paths.

    For scaling validations a single ``scaling.csv`` is written instead of
    the trials/summary pair.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    spec = result.spec
    written = []

    if spec.kind is ExperimentKind.SCALING_VALIDATION:
        if not result.scaling_rows:
            raise ValueError("no scaling rows to emit")
        path = out / "scaling.csv"
        fields = list(result.scaling_rows[0])
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(fields)
            for row in result.scaling_rows:
                writer.writerow([_fmt(row[k]) if k not in ("n",) else row[k] for k in fields])
        written.append(path)
        written.append(_write_plot_spec(out, spec, x_field="n", x_order="ascending",
                                        y_field="mc_estimate",
                                        series=["spacing_wl"],
                                        extra_series=["law_mc", "law_nomc"]))
        return written

    if not result.records:
        raise ValueError("no trial records to emit")
    trials_path = out / "trials.csv"
    with trials_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRIALS_CSV_HEADER.split(","))
        for rec in result.records:
            writer.writerow(rec.csv_row())
    written.append(trials_path)

    summary_path = out / "summary.csv"
    with summary_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SUMMARY_CSV_HEADER.split(","))
        for row in result.summaries:
            writer.writerow(row.csv_row())
    written.append(summary_path)

    if spec.kind is ExperimentKind.SWEEP_SPACING:
        plot = _write_plot_spec(out, spec, x_field="spacing_wl", x_order="descending",
                                y_field="mean_gain_db",
                                series=["architecture", "awareness"])
    else:
        plot = _write_plot_spec(out, spec, x_field="n", x_order="ascending",
                                y_field="mean_gain_db",
                                series=["architecture", "awareness", "spacing_wl"])
    written.append(plot)
    return written


def _write_plot_spec(out, spec, x_field, x_order, y_field, series, extra_series=None):
    path = out / "plot_spec.json"
    payload = {
        "experiment": spec.experiment_id,
        "kind": spec.kind.value,
        "data": "scaling.csv" if spec.kind is ExperimentKind.SCALING_VALIDATION
                else "summary.csv",
        "x": {"field": x_field, "order": x_order},
        "y": {"field": y_field},
        "series": series,
    }
    if extra_series:
        payload["overlays"] = extra_series
    with path.open("w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path
